"""
Sweep workbook export: one sheet of cell summaries and one sheet of
per-client LTA energy, with a formatted header row.
"""

from pathlib import Path
from typing import Dict, List

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill

SUMMARY_HEADERS = ["Cell", "Policy", "V", "Seed", "Rounds", "Total time (s)",
                   "LTA data (samples/s)", "Mean scheduled", "Final loss", "Final accuracy", "Status"]


class SweepWorkbook:
    """Collects sweep cells and writes them as an .xlsx overview."""

    def __init__(self):
        self.rows: List[Dict] = []

    def add_cell(self, cell: str, params: Dict, summary: Dict, status: str = "ok"):
        self.rows.append({"cell": cell, "params": params, "summary": summary, "status": status})

    @staticmethod
    def _apply_header_formatting(worksheet, num_columns: int):
        for col in range(1, num_columns + 1):
            cell = worksheet.cell(row=1, column=col)
            cell.font = Font(bold=True, size=11)
            cell.alignment = Alignment(horizontal="left", vertical="center")
            cell.fill = PatternFill(start_color="E8E8E8", end_color="E8E8E8", fill_type="solid")

    @staticmethod
    def _auto_size_columns(worksheet):
        for column in worksheet.columns:
            width = max((len(str(c.value)) for c in column if c.value is not None), default=0)
            worksheet.column_dimensions[column[0].column_letter].width = min(width + 2, 50)

    def _summary_sheet(self, worksheet):
        worksheet.title = "Cells"
        worksheet.append(SUMMARY_HEADERS)
        for row in self.rows:
            params, summary = row["params"], row["summary"]
            worksheet.append([
                row["cell"],
                params.get("policy"),
                params.get("v"),
                params.get("seed"),
                summary.get("rounds"),
                summary.get("total_time"),
                summary.get("lta_data"),
                summary.get("mean_scheduled"),
                summary.get("final_loss"),
                summary.get("final_accuracy"),
                row["status"],
            ])
        self._apply_header_formatting(worksheet, len(SUMMARY_HEADERS))
        self._auto_size_columns(worksheet)

    def _energy_sheet(self, worksheet):
        worksheet.title = "LTA energy"
        num_clients = max((len(r["summary"].get("lta_energy", [])) for r in self.rows), default=0)
        headers = ["Cell"] + [f"Client {k} (W)" for k in range(num_clients)]
        worksheet.append(headers)
        for row in self.rows:
            worksheet.append([row["cell"]] + list(row["summary"].get("lta_energy", [])))
        self._apply_header_formatting(worksheet, len(headers))
        self._auto_size_columns(worksheet)

    def save(self, path) -> Path:
        workbook = Workbook()
        self._summary_sheet(workbook.active)
        self._energy_sheet(workbook.create_sheet())
        path = Path(path)
        path.parent.mkdir(exist_ok=True, parents=True)
        workbook.save(path)
        return path
