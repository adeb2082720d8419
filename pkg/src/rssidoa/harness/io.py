"""File formats: calibration CSV, pattern JSON, sample-block CSV, configs."""

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import BadSpec, ParseError
from ..pattern import CalibrationRecord, PowerPattern
from ..signal_model import SampleBlock

CALIBRATION_HEADER = ["angle_deg", "sensor_index", "trial_index", "rssi"]
SAMPLES_HEADER = ["sensor_index", "k", "value"]


def _rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise ParseError("file is empty", 1)
        if [h.strip() for h in first] != header:
            raise ParseError(f"expected header {','.join(header)}", 1)
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}",
                                 reader.line_num)
            yield reader.line_num, [c.strip() for c in row]


def read_calibration_csv(path):
    records = []
    for line, (angle, sensor, trial, rssi) in _rows(path, CALIBRATION_HEADER):
        try:
            records.append(CalibrationRecord(float(angle), int(sensor), int(trial), float(rssi)))
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
    return records


def write_calibration_csv(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CALIBRATION_HEADER)
        for r in records:
            w.writerow([repr(float(r.angle_deg)), r.sensor_index, r.trial_index,
                        repr(float(r.rssi))])


def read_samples_csv(path):
    """Sample block from ``sensor_index,k,value`` rows; every (sensor, k) cell required."""
    cells = {}
    for line, (sensor, k, value) in _rows(path, SAMPLES_HEADER):
        try:
            key = (int(sensor), int(k))
            v = float(value)
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
        if key[0] < 0 or key[1] < 0:
            raise ParseError("negative sensor_index or k", line)
        if key in cells:
            raise ParseError(f"duplicate cell sensor={key[0]} k={key[1]}", line)
        cells[key] = v
    if not cells:
        raise ParseError("no sample rows")
    m = max(s for s, _ in cells) + 1
    k = max(j for _, j in cells) + 1
    samples = np.empty((m, k))
    for s in range(m):
        for j in range(k):
            if (s, j) not in cells:
                raise ParseError(f"missing sample sensor={s} k={j}")
            samples[s, j] = cells[(s, j)]
    return SampleBlock(samples)


def write_samples_csv(path_or_file, block):
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLES_HEADER)
        for s, row in enumerate(block.samples):
            for j, v in enumerate(row):
                w.writerow([s, j, repr(float(v))])
    finally:
        if own:
            fh.close()


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path, doc):
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None


def write_pattern(path, pattern):
    write_json(path, pattern.to_dict())


def read_pattern(path):
    doc = read_json(path)
    missing = {"knot_angles_deg", "num_sensors", "gains"} - set(doc)
    if missing:
        raise BadSpec(f"pattern file lacks keys {sorted(missing)}")
    return PowerPattern.from_dict(doc)


def write_columns(path_or_file, columns):
    """Write a dict of equal-length columns as CSV."""
    keys = list(columns)
    n = len(columns[keys[0]])
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for i in range(n):
            w.writerow([_fmt(columns[key][i]) for key in keys])
    finally:
        if own:
            fh.close()


def _fmt(v):
    if isinstance(v, float):
        return "inf" if v == float("inf") else f"{v:.6g}"
    return str(v)
