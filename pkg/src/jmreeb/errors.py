class DomainError(ValueError):
    """A base point lies outside the chart where the model is defined."""


class EnergyDomainError(DomainError):
    """A base point lies outside U_e = {V < e}."""


class DegenerateFiberError(ValueError):
    """Operation needs a nonzero covector."""


class ConfigError(ValueError):
    pass
