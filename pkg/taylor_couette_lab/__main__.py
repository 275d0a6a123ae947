if __name__ == "__main__":
    from taylor_couette_lab.cli.main import main
    main()
