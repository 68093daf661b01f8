"""Typed errors raised by the autodiff engine."""


class ShapeError(ValueError):
    """Operand shapes do not fit the primitive."""

    def __init__(self, op: str, *shapes: tuple[int, ...]):
        self.op = op
        self.shapes = shapes
        if not shapes:
            super().__init__(op)
            return
        rendered = " and ".join(str(tuple(shape)) for shape in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class ConvConfigError(ValueError):
    """Convolution hyperparameters produce an empty output."""


class AutodiffContractError(RuntimeError):
    """A caller broke a precondition of backward or an optimizer step."""


class TargetIndexError(IndexError):
    """A class target lies outside the logits range."""
