"""Figure identities and their input-schema requirements."""

from __future__ import annotations

from dataclasses import dataclass, field

from .io import read_table

#: Required columns of the primary input table, per figure id.
REQUIRED_COLUMNS = {
    "fig1": ("g", "label", "re_gamma_over_g", "im_gamma"),
    "fig2": ("label", "sector", "re_gamma", "im_gamma"),
    "fig3": ("label", "sector", "re_gamma", "im_gamma"),
    "fig4": ("L", "gap_abs_re"),
    "fig5": ("g", "label", "re_gamma_over_g", "im_gamma"),
    "fig6": ("g", "label", "j", "re_q_over_g", "im_q"),
}

FIGURE_IDS = tuple(sorted(REQUIRED_COLUMNS))


class SchemaError(ValueError):
    """An input table is missing required columns."""

    def __init__(self, path, missing):
        self.path = path
        self.missing = tuple(missing)
        super().__init__(
            f"{path}: missing required column(s): {', '.join(self.missing)}")


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: id, input tables, output path, styling."""

    figure: str
    inputs: tuple
    out: str
    sector_cmap: str = "coolwarm"

    def __post_init__(self):
        if self.figure not in REQUIRED_COLUMNS:
            raise ValueError(f"unknown figure id {self.figure!r}; "
                             f"expected one of {', '.join(FIGURE_IDS)}")
        if not self.inputs:
            raise ValueError("at least one input table is required")

    def load(self):
        """Read and validate the inputs; returns the list of Tables.

        The first input must carry the figure's required columns; extra
        inputs (fig6 accepts the transitions table alongside the trace)
        are passed through untouched.
        """
        tables = [read_table(path) for path in self.inputs]
        required = REQUIRED_COLUMNS[self.figure]
        missing = [c for c in required if c not in tables[0].columns]
        if missing:
            raise SchemaError(tables[0].path, missing)
        return tables
