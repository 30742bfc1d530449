"""One-on-one within-visual-range air combat: airframe, control, maneuvers and learning."""

__version__ = "0.1.0"
