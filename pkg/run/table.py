import json

import pandas as pd

from dev.evaluation import evaluate_dataset
from dev.pipeline import RunConfig, detect_dataset
from dev.synthesis import DATASET_LENGTHSCALE, GROUP_NAMES, generate_dataset
from utils import atomic_write

# (row label, overrides on top of the run settings)
METHOD_VARIANTS = [
    ("Hotelling's T2 (pointwise)", {"method": "hotelling"}),
    ("KDE (pointwise)", {"method": "pointwise-kde"}),
    ("MDI KDE", {"method": "mdi-kde"}),
    ("MDI Gaussian (full cov.)", {"method": "mdi-gaussian", "cov": "full"}),
    ("MDI Gaussian (no cov.)", {"method": "mdi-gaussian", "cov": "identity"}),
    ("MDI Gaussian (shared cov.)", {"method": "mdi-gaussian", "cov": "shared"}),
]


def run_table(options, instances=None):
    """
    AP and AUC of every method variant on every dataset group.

    Pointwise baselines are scored for AUC on their raw point scores, MDI variants on
    their detections spread over time steps. Returns (ap_table, auc_table).
    """
    if instances is None:
        instances = generate_dataset(
            options.get("seed", 42),
            n=options.get("length", 250),
            instances_per_group=options.get("instances_per_group", 20),
            lengthscale=options.get("lengthscale", DATASET_LENGTHSCALE),
            ell_anomaly=options.get("ell_anomaly", 0.2),
            ac_sigma_fraction=options.get("ac_sigma_fraction", 0.5),
        )

    ap_rows, auc_rows = [], []
    for label, overrides in METHOD_VARIANTS:
        config = RunConfig.from_options({**options, **overrides})
        results = detect_dataset(instances, config)
        detections = [d for found, _ in results for d in found]
        point_scores = {inst.id: scores for inst, (_, scores) in zip(instances, results, strict=True)} if config.is_baseline else None
        reports = evaluate_dataset(detections, instances, config.iou, point_scores)
        ap_rows.append({"method": label, **{g: r.ap for g, r in reports.items()}})
        auc_rows.append({"method": label, **{g: r.auc for g, r in reports.items()}})
        if options.get("verbose"):
            print(f"{label}: done")

    columns = ["method"] + [g for g in GROUP_NAMES if g in reports]
    return pd.DataFrame(ap_rows, columns=columns), pd.DataFrame(auc_rows, columns=columns)


def write_table(ap_table, auc_table, path):
    data = {
        "ap": ap_table.set_index("method").to_dict(orient="index"),
        "auc": auc_table.set_index("method").to_dict(orient="index"),
    }
    atomic_write(path, json.dumps(data, indent=2) + "\n")
