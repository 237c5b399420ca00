# Initialize reporting package
from .report_writer import ReportWriter, format_summary
