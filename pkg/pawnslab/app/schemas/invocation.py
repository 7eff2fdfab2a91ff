"""
Driver invocation schema
"""
from pydantic import BaseModel, ConfigDict, Field
from typing import Literal, Optional


Command = Literal[
    "check", "run", "dump-ast", "dump-types", "dump-sharing", "dump-components"
]


class Invocation(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    command: Command
    input_path: str = Field(alias="inputPath")
    # function name for dump-sharing, type expression for dump-components
    target: Optional[str] = None
    oracle: bool = False
    deny_warnings: bool = Field(default=False, alias="denyWarnings")
    max_errors: int = Field(default=50, alias="maxErrors", ge=1)
