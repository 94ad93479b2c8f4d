# utils/formatter.py
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

DIVERGED_MARK = "---"


class Formatter:
    """Formatting utilities"""

    def __init__(self, digits: int = 17):
        self.digits = digits

    @property
    def float_format(self) -> str:
        return f"%.{self.digits}g"

    def format_float(self, value: Optional[float]) -> str:
        """Round-trippable text for a float, C locale"""
        if value is None:
            return "N/A"
        return self.float_format % float(value)

    def format_epochs(self, mean: float, diverged: bool = False) -> str:
        """Table cell: mean epochs to one decimal, or '---' for diverged cells"""
        if diverged:
            return DIVERGED_MARK
        if mean is None or not np.isfinite(mean):
            return "N/A"
        return f"{mean:.1f}"

    def format_residual(self, value: float) -> str:
        if value is None or not np.isfinite(value):
            return "N/A"
        return f"{value:.2e}"

    def write_csv(self, df: pd.DataFrame, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format=self.float_format, lineterminator="\n")
        return path

    def to_csv_text(self, df: pd.DataFrame) -> str:
        return df.to_csv(index=False, float_format=self.float_format, lineterminator="\n")

    def sweep_table(self, summary: pd.DataFrame, with_residuals: Optional[bool] = None) -> str:
        """Aligned text table: one row per τ cell, one column per algorithm.

        Residual rows (½‖r‖²) are added for the l1 family unless told otherwise.
        """
        if summary.empty:
            return ""
        algorithms = list(dict.fromkeys(summary["algorithm"]))
        if with_residuals is None:
            with_residuals = bool((summary["family"] == "l1").any())

        df = summary.copy()
        df["cell"] = [
            "theory" if pd.isna(c) else f"c = {c:g}" for c in df["tau_multiplier"]
        ]
        df["epochs"] = [self.format_epochs(m, d) for m, d in zip(df["mean_epochs"], df["diverged"])]
        cells = list(dict.fromkeys(df["cell"]))

        table = df.pivot(index="cell", columns="algorithm", values="epochs")
        table = table.reindex(index=cells, columns=algorithms)
        table.index.name = "τ"

        if with_residuals:
            df["residual"] = [DIVERGED_MARK if d else self.format_residual(r)
                              for r, d in zip(df["mean_half_sq_residual"], df["diverged"])]
            res = df.pivot(index="cell", columns="algorithm", values="residual")
            res = res.reindex(index=cells, columns=algorithms)
            res.index = [f"{c} ½‖r‖²" for c in res.index]
            table = pd.concat([table, res])
            table.index.name = "τ"

        return table.to_string()
