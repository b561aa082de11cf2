# formatting.py

from typing import Tuple

CSV_FLOAT_FORMAT = "%.9g"


def format_float(value: float) -> str:
    """
    Formats a float with 9 significant digits, the precision used in every
    output file.

    Returns:
        str: Locale-independent text with '.' as decimal separator.
    """
    return CSV_FLOAT_FORMAT % value


def parse_label_value(text: str) -> Tuple[str, str]:
    """
    Splits a "label=value" command-line argument.

    Raises:
        ValueError: If there is no '=' or either side is empty.
    """
    label, sep, value = text.partition("=")
    label, value = label.strip(), value.strip()
    if not sep or not label or not value:
        raise ValueError(f"expected label=value, got {text!r}")
    return label, value
