from .report import ALL_METRICS, PERFECT, MeasureConfig, RegressionSpec, compare_reports, report_json, run_measures

__all__ = ["ALL_METRICS", "PERFECT", "MeasureConfig", "RegressionSpec", "compare_reports",
           "report_json", "run_measures"]
