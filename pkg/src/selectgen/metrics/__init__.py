from .battery import (
    REPORT_FORMAT,
    ExampleResult,
    aggregate,
    build_report,
    evaluate_example,
    run_battery,
    thread_budget,
    write_report,
)
from .ngram import bleu, rouge, rouge_l, rouge_n, self_bleu

__all__ = [
    "REPORT_FORMAT",
    "ExampleResult",
    "aggregate",
    "bleu",
    "build_report",
    "evaluate_example",
    "rouge",
    "rouge_l",
    "rouge_n",
    "run_battery",
    "self_bleu",
    "thread_budget",
    "write_report",
]
