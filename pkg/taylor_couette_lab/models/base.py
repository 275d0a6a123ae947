from pydantic import BaseModel, ConfigDict

class FrozenModel(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

class ArrayModel(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)
