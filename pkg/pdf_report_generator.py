# pdf_report_generator.py

from datetime import datetime
from fractions import Fraction as Frac
from pathlib import Path
from typing import Any, Dict, List

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import PageBreak, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

MAX_ROWS = 400


class PDFReportGenerator:
    """
    Sweep summary as PDF: parameters, pass/fail counts, the optimum
    distribution and the failing graphs.
    """

    def __init__(self, output_dir: str = "reports"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

        self.styles = getSampleStyleSheet()
        self.styles.add(
            ParagraphStyle(
                name="SectionHeader",
                fontSize=14,
                leading=18,
                spaceAfter=10,
                textColor=colors.darkblue
            )
        )

    # ------------------------------------------------------------------
    # PUBLIC API
    # ------------------------------------------------------------------

    def generate_sweep(self, summary: Dict[str, Any], results: List[Dict[str, Any]]) -> Path:
        pdf_path = self.output_dir / f"sweep_N{summary['n']}_a{summary['a']}.pdf"
        doc = SimpleDocTemplate(
            str(pdf_path),
            pagesize=A4,
            rightMargin=40,
            leftMargin=40,
            topMargin=40,
            bottomMargin=40
        )
        story = []

        story.append(Paragraph("Triangle Packing Sweep Report", self.styles["Title"]))
        story.append(Spacer(1, 0.2 * inch))
        meta = (
            f"<b>Vertices:</b> {summary['n']}<br/>"
            f"<b>Missing edges:</b> {summary['n'] - 4 + summary['a']}<br/>"
            f"<b>Uncovered bound a:</b> {summary['a']}<br/>"
            f"<b>Triangle cap:</b> {summary['beta']}<br/>"
            f"<b>Generated On:</b> {datetime.now().strftime('%d %B %Y')}"
        )
        story.append(Paragraph(meta, self.styles["Normal"]))
        story.append(Spacer(1, 0.3 * inch))

        story.append(Paragraph("Summary", self.styles["SectionHeader"]))
        table = Table([
            ["Graphs", str(summary["count"])],
            ["Passed", str(summary["count"] - len(summary["failures"]))],
            ["Failed", str(len(summary["failures"]))],
            ["Max optimum", summary["max_optimum"]],
            ["Wall time (s)", str(summary.get("wall_time", ""))],
        ], colWidths=[3 * inch, 3 * inch])
        table.setStyle(self._table_style())
        story.append(table)
        story.append(Spacer(1, 0.3 * inch))

        story.append(Paragraph("Optimum Distribution", self.styles["SectionHeader"]))
        histogram: Dict[Frac, int] = {}
        for r in results:
            value = Frac(r["optimum"])
            histogram[value] = histogram.get(value, 0) + 1
        rows = [["Optimum", "Graphs"]] + [[str(v), str(c)] for v, c in sorted(histogram.items())]
        table = Table(rows, colWidths=[3 * inch, 3 * inch])
        table.setStyle(self._table_style())
        story.append(table)

        if summary["failures"]:
            story.append(PageBreak())
            story.append(Paragraph("Graphs Above the Bound", self.styles["SectionHeader"]))
            failing = [r for r in results if not r["passed"]][:MAX_ROWS]
            rows = [["graph6", "Optimum"]] + [[r["graph"], r["optimum"]] for r in failing]
            table = Table(rows, colWidths=[4 * inch, 2 * inch])
            table.setStyle(self._table_style())
            story.append(table)

        doc.build(story, onFirstPage=self._footer, onLaterPages=self._footer)
        return pdf_path

    # ------------------------------------------------------------------
    # INTERNAL HELPERS
    # ------------------------------------------------------------------

    def _table_style(self):
        return TableStyle([
            ("BACKGROUND", (0, 0), (-1, 0), colors.lightgrey),
            ("GRID", (0, 0), (-1, -1), 1, colors.grey),
            ("FONT", (0, 0), (-1, -1), "Helvetica"),
            ("ALIGN", (0, 0), (-1, -1), "LEFT"),
            ("VALIGN", (0, 0), (-1, -1), "MIDDLE"),
        ])

    def _footer(self, canvas, doc):
        canvas.saveState()
        canvas.setFont("Helvetica", 9)
        canvas.setFillColor(colors.grey)
        canvas.drawString(40, 20, f"Exact rational certificates - page {doc.page}")
        canvas.restoreState()
