from .reference import (
    NA,
    ReferenceTable,
    load_reference,
    normalize_table_id,
    parse_cell,
    table_ids
)
from .reproduce import (
    CellComparison,
    ComparisonReport,
    REPRODUCERS,
    compare_cell,
    reproduce,
    reproduce_all
)
from .ledger import LedgerEntry, ledger_entries
from .render import render, render_csv, render_json, render_table, format_value, to_rows
