"""Command-line surface, a thin dispatch layer over the library.

Exit codes: 0 success, 1 usage, 2 I/O or file-format trouble, 3 violated
numerical precondition. Output files are written atomically (temp + rename)
so failed commands leave nothing behind.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import cloning, io as gio
from .bench import run_bench, write_csv
from .diffops import interior_max_curl
from .errors import (
    GfcError,
    GftFormatError,
    UnsupportedImageFormatError,
)
from .fields import Field, VectorField
from .kernels import DEFAULT_PAD
from .layers import GID, ChannelMixer, LayerSpec, gid_forward
from .solver import CORNER_ZERO, MEAN_ZERO, SolverConfig, laplacian_stencil, solve_laplacian

_POLICIES = {"corner": CORNER_ZERO, "mean": MEAN_ZERO}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


def _atomic(path, writer) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_gft(path) -> Field:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return gio.gft_read(path)


def _read_image(path) -> Field:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return gio.pnm_read(path)


@click.group()
def cli():
    """Spectral Laplacian solving and conservative-field tools."""


@cli.command()
@click.option("--input", "input_path", required=True, help="Input GFT file holding a Laplacian.")
@click.option("--output", "output_path", required=True, help="Output GFT file for the potential.")
@click.option("--pad", default=DEFAULT_PAD, show_default=True, type=int)
@click.option("--constant", default="corner", show_default=True,
              type=click.Choice(["corner", "mean"]))
def solve(input_path, output_path, pad, constant):
    """Solve a stored Laplacian into its potential."""
    field = _read_gft(input_path)
    cfg = SolverConfig(pad=pad, constant_policy=_POLICIES[constant])
    result = solve_laplacian(field, cfg)
    _atomic(output_path, lambda p: gio.gft_write(result, p))


@cli.command()
@click.option("--image", "image_path", required=True, help="P5/P6 image to verify.")
@click.option("--report", is_flag=True, help="Print per-channel error breakdown.")
def roundtrip(image_path, report):
    """Differentiate-then-integrate an image and report the reconstruction error."""
    img = _read_image(image_path)
    arr = img.data
    b, c, h, w = arr.shape
    framed = np.zeros((b, c, h + 2, w + 2))
    framed[:, :, 1:-1, 1:-1] = arr
    lap = laplacian_stencil(Field(framed))
    solved = solve_laplacian(lap, SolverConfig(constant_policy=CORNER_ZERO))
    recon = solved.data[:, :, 1:-1, 1:-1]
    err = np.abs(recon - arr)
    max_err = float(err.max())
    rms = float(np.sqrt(np.mean(err**2)))
    click.echo(f"max-abs-error {max_err:.3e}")
    click.echo(f"rms-error {rms:.3e}")
    if report:
        for ch in range(c):
            click.echo(f"channel {ch}: max {float(err[:, ch].max()):.3e}")
    if max_err > 1e-6:
        raise GfcError(f"roundtrip error {max_err:.3e} exceeds 1e-6")


def _group_vectors(f: Field) -> list[VectorField]:
    dim = f.dim
    groups = []
    for g in range(f.channels // dim):
        comps = tuple(Field(f.data[:, g * dim + k : g * dim + k + 1])
                      for k in range(dim))
        groups.append(VectorField(comps))
    return groups


@cli.command()
@click.option("--field", "field_path", required=True, help="GFT file, channels paired per axis.")
@click.option("--output", "output_path", required=True)
@click.option("--report-curl", is_flag=True, help="Print max interior curl before and after.")
def project(field_path, output_path, report_curl):
    """Project a stored vector field onto its conservative part."""
    field = _read_gft(field_path)
    spec = LayerSpec(kind=GID, mixer=ChannelMixer())
    result = gid_forward(field, spec)
    if report_curl:
        before = max(interior_max_curl(v) for v in _group_vectors(field))
        after = max(interior_max_curl(v) for v in _group_vectors(result))
        click.echo(f"max-interior-curl before {before:.3e}")
        click.echo(f"max-interior-curl after {after:.3e}")
    _atomic(output_path, lambda p: gio.gft_write(result, p))


def _parse_offset(text):
    try:
        x_s, y_s = text.split(",")
        return int(x_s), int(y_s)
    except ValueError:
        raise click.UsageError(f"offset must be X,Y integers, got {text!r}")


@cli.command()
@click.option("--base", "base_path", required=True)
@click.option("--patch", "patch_path", required=True)
@click.option("--mask", "mask_path", required=True)
@click.option("--offset", default="0,0", show_default=True, help="X,Y patch placement.")
@click.option("--output", "output_path", required=True)
def clone(base_path, patch_path, mask_path, offset, output_path):
    """Composite a patch into a base image in the gradient domain."""
    base = _read_image(base_path)
    patch = _read_image(patch_path)
    mask = _read_image(mask_path)
    result = cloning.clone(base, patch, mask, _parse_offset(offset))
    _atomic(output_path, lambda p: gio.pnm_write(result, p))


@cli.command()
@click.option("--sizes", required=True, help="Comma-separated grid side lengths.")
@click.option("--repeats", default=5, show_default=True, type=int)
@click.option("--csv", "csv_path", required=True)
def bench(sizes, repeats, csv_path):
    """Time the solver across sizes and write size,n,median_seconds CSV."""
    if repeats < 3:
        raise click.UsageError("at least 3 repeats required")
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.UsageError(f"sizes must be comma-separated integers, got {sizes!r}")
    if not size_list:
        raise click.UsageError("no sizes given")
    if any(s < 8 for s in size_list):
        raise click.UsageError("bench sizes must be >= 8")
    records = run_bench(size_list, repeats=repeats)
    _atomic(csv_path, lambda p: write_csv(records, p))
    for r in records:
        click.echo(f"{r.size} {r.n} {r.wall_time:.6f}s")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except FileNotFoundError as exc:
        click.echo(f"error: file not found: {exc}", err=True)
        return EXIT_IO
    except (GftFormatError, UnsupportedImageFormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_IO
    except GfcError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
