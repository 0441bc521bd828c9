"""coalcan: canonical extensions, Sahlqvist canonicity and coalgebraic
canonical models on finite structures."""

__version__ = "0.1.0"
