# /core/errors.py


class ParameterError(ValueError):
    """A parameter outside its valid range. `param` names it (e.g. "delta_n", "eta")."""

    def __init__(self, param: str, message: str):
        super().__init__(f"{param}: {message}")
        self.param = param
        self.message = message


class FieldError(ValueError):
    pass


class DecodeError(ValueError):
    pass


class RegionError(ValueError):
    pass
