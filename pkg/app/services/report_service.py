"""CSV, JSON and SVG writers for run outputs.

Every CSV starts with ``# config_hash=... scale=...`` comment lines and stores
floats with ``%.17g`` so that identical runs produce identical files.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.cli.schemas import MeasurementMetadata  # noqa: E402
from app.core.curves import LaurentMap, parameter_grid  # noqa: E402
from app.core.errors import ConfigurationError  # noqa: E402
from app.core.gpst import GpstMatrix  # noqa: E402
from app.core.reconstruct import NoiseStudy, ReconstructionResult  # noqa: E402
from app.core.singlelayer import MeasurementMatrix  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SVG_HASH_SALT = "cavity-reconstruction"
CURVE_SAMPLES = 512


def _header(config_hash: str, scale: float, extra: Optional[dict] = None) -> List[str]:
    lines = [f"# config_hash={config_hash} scale={scale!r}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={value}")
    return lines


def write_csv(path: Path, frame: pd.DataFrame, config_hash: str, scale: float, extra: Optional[dict] = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in _header(config_hash, scale, extra):
            handle.write(line + "\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


# ============ Measurement ============

def write_measurement(directory: Path, measurement: MeasurementMatrix, metadata: MeasurementMetadata) -> List[Path]:
    size = 2 * measurement.order
    i, j = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    frame = pd.DataFrame(
        {
            "i": i.ravel(),
            "j": j.ravel(),
            "r_re": measurement.entries.real.ravel(),
            "r_im": measurement.entries.imag.ravel(),
            "q_re": measurement.outer_gpst.entries.real.ravel(),
            "q_im": measurement.outer_gpst.entries.imag.ravel(),
        }
    )
    csv_path = write_csv(directory / "measurement.csv", frame, metadata.config_hash, measurement.scale)
    json_path = directory / "measurement.json"
    json_path.write_text(metadata.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return [csv_path, json_path]


def read_measurement(directory: Path) -> MeasurementMatrix:
    csv_path, json_path = directory / "measurement.csv", directory / "measurement.json"
    try:
        metadata = MeasurementMetadata.model_validate_json(json_path.read_text(encoding="utf-8"))
        frame = read_csv(csv_path)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Cannot read measurement in {directory}: {e}") from e

    size = 2 * metadata.order
    if len(frame) != size * size:
        raise ConfigurationError(f"{csv_path} holds {len(frame)} entries, expected {size * size}")
    frame = frame.sort_values(["i", "j"])
    entries = (frame["r_re"].to_numpy() + 1j * frame["r_im"].to_numpy()).reshape(size, size)
    outer = (frame["q_re"].to_numpy() + 1j * frame["q_im"].to_numpy()).reshape(size, size)
    return MeasurementMatrix(
        order=metadata.order,
        entries=entries,
        scale=metadata.scale,
        center=complex(*metadata.center),
        outer_gpst=GpstMatrix(metadata.order, outer, kind="outer"),
        conditions=dict(metadata.conditions),
    )


# ============ Reconstruction ============

def coefficient_frame(laurent: LaurentMap, errors: Optional[np.ndarray] = None) -> pd.DataFrame:
    coefficients = laurent.coefficients()
    frame = pd.DataFrame(
        {
            "k": np.arange(1, -laurent.order - 1, -1),
            "re": coefficients.real,
            "im": coefficients.imag,
        }
    )
    if errors is not None:
        frame["relative_error"] = errors
    return frame


def write_coefficients(
    directory: Path,
    result: ReconstructionResult,
    config_hash: str,
    retained_order: Optional[int] = None,
) -> Path:
    extra = {"variant": result.variant, "noise": result.noise}
    if retained_order is not None:
        extra["retained_order"] = retained_order
    frame = coefficient_frame(result.map, result.errors)
    return write_csv(directory / "coefficients.csv", frame, config_hash, result.scale, extra)


def write_coefficients_by_seed(directory: Path, study: NoiseStudy, config_hash: str, scale: float) -> Path:
    frames = []
    for seed, result in zip(study.seeds, study.results):
        frame = coefficient_frame(result.map, result.errors)
        frame.insert(0, "seed", seed)
        frames.append(frame)
    frame = pd.concat(frames, ignore_index=True)
    extra = {"noise": study.noise, "retained_order": study.retained_order}
    return write_csv(directory / "coefficients_by_seed.csv", frame, config_hash, scale, extra)


def curve_samples(laurent: LaurentMap, samples: int = CURVE_SAMPLES) -> pd.DataFrame:
    t = parameter_grid(samples)
    points = laurent(np.exp(1j * t))
    return pd.DataFrame({"t": t, "x": points.real, "y": points.imag})


def write_curve(directory: Path, laurent: LaurentMap, config_hash: str, scale: float) -> Path:
    return write_csv(directory / "curve.csv", curve_samples(laurent), config_hash, scale)


def write_overlay_svg(
    directory: Path,
    reconstructed: LaurentMap,
    config_hash: str,
    scale: float,
    truth: Optional[LaurentMap] = None,
    outer: Optional[np.ndarray] = None,
    center: complex = 0j,
    title: str = "",
) -> Path:
    """Reconstructed boundary in red over the true one in gray"""
    path = directory / "reconstruction.svg"
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        if outer is not None:
            closed = np.append(outer, outer[:1])
            ax.plot(closed.real, closed.imag, color="black", linewidth=1.0)
        if truth is not None:
            samples = curve_samples(truth)
            ax.fill(samples["x"], samples["y"], color="0.7", linewidth=0)
        samples = curve_samples(reconstructed)
        ax.plot(np.append(samples["x"], samples["x"][:1]), np.append(samples["y"], samples["y"][:1]), color="red")
        ax.plot([center.real], [center.imag], "o", color="blue", markersize=3)
        ax.set_aspect("equal")
        if title:
            ax.set_title(title)
        fig.savefig(
            path,
            format="svg",
            metadata={"Date": None, "Description": f"config_hash={config_hash} scale={scale!r}"},
        )
        plt.close(fig)
    return path


# ============ Tables ============

def write_table(directory: Path, filename: str, rows: Iterable[dict], columns: List[str], config_hash: str, scale: float) -> Path:
    frame = pd.DataFrame(list(rows), columns=columns)
    return write_csv(directory / filename, frame, config_hash, scale)
