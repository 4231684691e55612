"""Month-grid helpers shared across pmkit modules."""

MONTHS_PER_YEAR = 12
MONTH_NAMES = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


def calendar_month(farm_month: int, start_calendar_month: int) -> int:
    """Return the calendar month (1..12) of a farm-operation month.

    Farm month 1 falls in ``start_calendar_month``.
    """
    if not 1 <= start_calendar_month <= MONTHS_PER_YEAR:
        raise ValueError(f"start_calendar_month must be in 1..12, got {start_calendar_month}")
    return (start_calendar_month - 1 + farm_month - 1) % MONTHS_PER_YEAR + 1
