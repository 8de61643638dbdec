class ExportError(ValueError):
    """Invalid input data or unusable model configuration; the CLI exits 1."""
