__version__ = "0.1.0"
__author__ = "SecureLab"
__description__ = "Taylor-Couette verification toolkit and steady Navier-Stokes solver"
