# Process-spec and run-config parsing helpers

import json
import logging
import math
from catalog import CATALOG
from config import CONFIG_SCHEMA_VERSION
from errors import ModelValidationError, SpecParseError
from levy_model import LevyModel
from tail_helpers import PowerTail, TableTail, ZeroTail


SPEC_KEYS = {"label", "gamma", "sigma2", "measure"}
MEASURE_KEYS = {
    "stable_tails": {"kind", "alpha", "c_plus", "c_minus", "tempering"},
    "table": {"kind", "x", "tail_plus", "tail_minus", "interpolation"},
    "none": {"kind"},
}

RUN_CONFIG_KEYS = {
    "schema_version",
    "grid",
    "t",
    "n",
    "M",
    "seed",
    "epsilon",
    "h_plus",
    "h_minus",
    "gaussian_surrogate",
    "kappa",
    "C",
    "r_max",
    "s_min",
    "workers",
    "xlsx",
}


##### LOOKUP HELPERS #####


def get_spec_value(data, *path, default=None):

    """
    Navigate nested JSON and extract a value

    Args:
        data: The JSON object to navigate
        *path: Keys to navigate through (e.g. 'measure', 'alpha')
        default: Returned when any key along the path is missing

    Returns:
        The value at the path, or default
    """

    current = data
    for key in path:
        if not isinstance(current, dict) or key not in current:
            return default
        current = current[key]
    return current


def _number(data, *path, default=None):
    value = get_spec_value(data, *path, default=default)
    where = ".".join(path)

    if value is None:
        raise SpecParseError(f"missing numeric field '{where}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecParseError(f"field '{where}' must be a number, got {value!r}")
    if not math.isfinite(value):
        raise SpecParseError(f"field '{where}' must be finite")

    return float(value)


def _number_list(data, key):
    values = data.get(key)
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise SpecParseError(f"measure field '{key}' must be a list of numbers")
    return [float(v) for v in values]


def _check_keys(data, allowed, where):
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SpecParseError(f"unknown keys in {where}: {', '.join(unknown)}")


##### PROCESS SPECS #####


def _stable_tails(measure):
    alpha = _number(measure, "alpha")
    c_plus = _number(measure, "c_plus", default=0.0)
    c_minus = _number(measure, "c_minus", default=0.0)
    tempering = _number(measure, "tempering", default=0.0)

    if not 0.0 < alpha < 2.0:
        raise ModelValidationError(f"not a Lévy measure: alpha={alpha} must lie in (0, 2)")
    if c_plus < 0 or c_minus < 0 or tempering < 0:
        raise ModelValidationError("not a Lévy measure: c_plus, c_minus and tempering must be >= 0")

    tail_plus = PowerTail(c_plus, alpha, tempering) if c_plus > 0 else ZeroTail()
    tail_minus = PowerTail(c_minus, alpha, tempering) if c_minus > 0 else ZeroTail()
    return tail_plus, tail_minus


def _table_tails(measure):
    x = _number_list(measure, "x")
    interpolation = measure.get("interpolation", "loglinear")
    tails = []

    for key in ("tail_plus", "tail_minus"):
        values = _number_list(measure, key)
        if len(values) != len(x):
            raise SpecParseError(f"measure field '{key}' must have as many entries as 'x'")
        try:
            tails.append(TableTail(x, values, interpolation) if any(values) else ZeroTail())
        except ValueError as e:
            raise SpecParseError(f"bad table measure: {e}") from e

    return tails[0], tails[1]


def build_model(spec):

    """
    Build a LevyModel from a parsed process-spec document

    Args:
        spec: Dict with label, gamma, sigma2 and a measure block

    Returns:
        LevyModel carrying the spec as its echo
    """

    if not isinstance(spec, dict):
        raise SpecParseError("process spec must be a JSON object")
    _check_keys(spec, SPEC_KEYS, "process spec")

    label = spec.get("label", "levy")
    if not isinstance(label, str) or not label:
        raise SpecParseError("label must be a non-empty string")

    gamma = _number(spec, "gamma", default=0.0)
    sigma2 = _number(spec, "sigma2", default=0.0)
    if sigma2 < 0:
        raise ModelValidationError(f"sigma2 must be >= 0, got {sigma2}")

    measure = spec.get("measure")
    if not isinstance(measure, dict):
        raise SpecParseError("process spec needs a 'measure' object")

    kind = measure.get("kind")
    if kind not in MEASURE_KEYS:
        raise SpecParseError(f"unknown measure kind {kind!r}")
    _check_keys(measure, MEASURE_KEYS[kind], f"measure '{kind}'")

    if kind == "stable_tails":
        tail_plus, tail_minus = _stable_tails(measure)
    elif kind == "table":
        tail_plus, tail_minus = _table_tails(measure)
    else:
        tail_plus, tail_minus = ZeroTail(), ZeroTail()

    density_plus = tail_plus.density if isinstance(tail_plus, PowerTail) else None
    density_minus = tail_minus.density if isinstance(tail_minus, PowerTail) else None

    return LevyModel(
        gamma=gamma,
        sigma2=sigma2,
        tail_plus=tail_plus,
        tail_minus=tail_minus,
        density_plus=density_plus,
        density_minus=density_minus,
        label=label,
        spec=spec,
    )


def load_process_spec(reference):

    """
    Read a process spec from a JSON file or a 'catalog:<name>' reference

    Returns:
        The parsed spec dict
    """

    if reference.startswith("catalog:"):
        name = reference.split(":", 1)[1]
        if name not in CATALOG:
            raise SpecParseError(f"unknown catalog model '{name}'")
        logging.info(f"Using catalog model '{name}'")
        return json.loads(json.dumps(CATALOG[name]))

    try:
        with open(reference, "r", encoding="utf-8") as f:
            spec = json.load(f)
    except FileNotFoundError as e:
        raise SpecParseError(f"spec file not found: {reference}") from e
    except json.JSONDecodeError as e:
        raise SpecParseError(f"malformed JSON in {reference}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise SpecParseError(f"could not read {reference}: {e}") from e

    logging.info(f"Loaded process spec from {reference}")
    return spec


def catalog_model(name):
    if name not in CATALOG:
        raise SpecParseError(f"unknown catalog model '{name}'")
    return build_model(json.loads(json.dumps(CATALOG[name])))


def load_model(reference):
    return build_model(load_process_spec(reference))


##### RUN CONFIGS #####


def load_run_config(path):

    """
    Read a versioned JSON run config

    Unknown keys and a schema_version other than the supported one are
    errors, so a typo never silently falls back to a default.
    """

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SpecParseError(f"malformed JSON in config {path}: {e.msg}") from e
    except OSError as e:
        raise SpecParseError(f"could not read config {path}: {e}") from e

    return check_run_config(data)


def check_run_config(data):
    if not isinstance(data, dict):
        raise SpecParseError("run config must be a JSON object")

    _check_keys(data, RUN_CONFIG_KEYS, "run config")

    version = data.get("schema_version")
    if version != CONFIG_SCHEMA_VERSION:
        raise SpecParseError(
            f"run config schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}"
        )

    return data


def parse_grid(text):

    """Parse 'jmin:jmax' into a pair of integers"""

    if isinstance(text, (list, tuple)) and len(text) == 2:
        j_min, j_max = text
    else:
        try:
            j_min, j_max = (int(part) for part in str(text).split(":"))
        except ValueError as e:
            raise SpecParseError(f"grid must look like 'jmin:jmax', got {text!r}") from e

    if not isinstance(j_min, int) or not isinstance(j_max, int) or j_min >= j_max:
        raise SpecParseError(f"grid needs integers jmin < jmax, got {text!r}")

    return j_min, j_max


def parse_t_values(text):

    """Parse '1e-2,1e-3' (or a JSON list) into positive floats"""

    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = [p for p in str(text).split(",") if p.strip()]

    try:
        values = [float(p) for p in parts]
    except (TypeError, ValueError) as e:
        raise SpecParseError(f"t values must be numbers, got {text!r}") from e

    if not values or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise SpecParseError(f"t values must be positive and finite, got {text!r}")

    return values
