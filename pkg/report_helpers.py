# Report writers: CSV, JSON and optional XLSX artifacts

import hashlib
import json
import logging
import math
import os
import numpy as np
import pandas as pd
from criterion import RATIO_COLUMNS
from dataclasses import asdict
from errors import ReportWriteError
from levy_model import FUNCTIONAL_COLUMNS


BATCH_COLUMNS = ["t", "n", "p_hat", "ci_low", "ci_high", "estimator"]


##### SERIALIZATION #####


def to_jsonable(value):

    """
    Convert report values into plain JSON types

    Non-finite floats become the strings "inf", "-inf" and "nan" so the
    output stays valid JSON.
    """

    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def config_hash(config):

    """sha256 of the canonical JSON form of a config echo"""

    canonical = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_metadata(label, seed, config):
    return {"label": label, "seed": seed, "config_hash": config_hash(config)}


##### WRITERS #####


def ensure_output_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def write_csv(df, path, metadata):

    """
    Write a DataFrame as CSV with leading '#' metadata lines

    Args:
        df: DataFrame with the declared columns
        path: Output file path
        metadata: Dict of label, seed and config_hash

    Returns:
        The path written
    """

    with open(path, "w", encoding="utf-8", newline="") as f:
        for key in sorted(metadata):
            f.write(f"# {key}: {metadata[key]}\n")
        df.to_csv(f, index=False, lineterminator="\n")

    logging.info(f"Wrote {path} ({len(df)} rows)")
    return path


def read_csv(path):
    return pd.read_csv(path, comment="#")


def write_json(data, path, metadata):
    payload = {"meta": metadata}
    payload.update(to_jsonable(data))

    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")

    logging.info(f"Wrote {path}")
    return path


def write_workbook(tables, path, metadata):

    """
    Bundle several tables into one XLSX workbook, one sheet per table

    The first sheet, 'meta', carries the label, seed and config hash.

    Args:
        tables: Dict of sheet name to DataFrame
        path: Output .xlsx path
        metadata: Dict of label, seed and config_hash

    Raises:
        ReportWriteError: when the workbook cannot be written
    """

    meta = pd.DataFrame(sorted(metadata.items()), columns=["key", "value"])

    try:
        with pd.ExcelWriter(path, engine="openpyxl") as writer:
            meta.to_excel(writer, sheet_name="meta", index=False)
            for name, df in tables.items():
                df.to_excel(writer, sheet_name=name[:31], index=False)
            writer.book.properties.title = str(metadata.get("label", ""))
            writer.book.properties.keywords = f"seed={metadata.get('seed')}"
            writer.book.properties.identifier = str(metadata.get("config_hash", ""))
    except (OSError, ValueError) as e:
        logging.error(f"Could not write workbook {path}: {e}")
        raise ReportWriteError(f"could not write workbook {path}: {e}") from e

    logging.info(f"Wrote workbook {path} with {len(tables)} sheets")
    return path


##### TABLES #####


def functional_frame(table):
    return table.to_frame()[FUNCTIONAL_COLUMNS]


def ratio_frame(samples):
    return pd.DataFrame([asdict(s) for s in samples], columns=RATIO_COLUMNS)


def batch_frame(series_list):
    rows = []
    for series in series_list:
        rows.extend(series.rows())
    return pd.DataFrame(rows, columns=BATCH_COLUMNS)


def witness_frame(payload):

    """Witness sequence with P(X_t >= 0) and its interval at each witness time"""

    frame = pd.DataFrame(payload["sequence"])
    positive = payload["positive"]
    frame["p_hat"] = [e["p_hat"] for e in positive]
    frame["ci_low"] = [e["ci"][0] for e in positive]
    frame["ci_high"] = [e["ci"][1] for e in positive]
    return frame


def kolmogorov_frame(payload):
    return pd.DataFrame(payload["rows"])
