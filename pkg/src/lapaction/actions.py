"""Action vocabulary: six detectable surgical actions plus the catch-all rest pool."""

import enum


class ActionLabel(str, enum.Enum):
    ABDOMINAL_ACCESS = "abdominal_access"
    GRASPING_ANATOMY = "grasping_anatomy"
    KNOT_PUSHING = "knot_pushing"
    NEEDLE_PULLING = "needle_pulling"
    NEEDLE_PUSHING = "needle_pushing"
    SUCTION = "suction"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value


# The trainable one-vs-rest targets; OTHER only ever feeds the rest pool.
TARGET_ACTIONS = tuple(a for a in ActionLabel if a is not ActionLabel.OTHER)


def parse_action(name: str) -> ActionLabel:
    try:
        return ActionLabel(name)
    except ValueError:
        valid = ", ".join(a.value for a in ActionLabel)
        raise ValueError(f"unknown action label {name!r}; expected one of: {valid}") from None
