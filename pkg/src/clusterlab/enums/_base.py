from enum import Enum
from typing_extensions import Self


class PartialEnum(Enum):
    """Enum read from and written to text by lowercase member name."""

    def __repr__(self) -> str:
        return str(self)

    @classmethod
    def of_name(cls, name: str, /) -> Self:
        """Member for a name in any letter case; KeyError when there is none."""
        return cls[name.upper()]

    @classmethod
    def names(cls) -> tuple[str, ...]:
        """Names accepted on the command line and in config files."""
        return tuple(member.name.lower() for member in cls)
