"""Shared fixture: real openrg CLI output to render from."""

import subprocess

import pytest


def _openrg(argv, cwd):
    subprocess.run(["openrg", *argv], cwd=cwd, check=True,
                   capture_output=True, text=True)


@pytest.fixture(scope="session")
def csv_dir(tmp_path_factory):
    """One directory of CLI tables covering every figure's schema."""
    out = tmp_path_factory.mktemp("tables")
    _openrg(["flow", "--L", "3", "--N", "3", "--g-grid", "0.2,0.6,1.0",
             "--out", "flow.csv"], out)
    _openrg(["spectrum", "--L", "3", "--g", "0.5", "--all-sectors",
             "--out", "spectrum.csv"], out)
    _openrg(["gap-scaling", "--sizes", "10,12,14", "--g", "2.0",
             "--workers", "1", "--out", "gap.csv"], out)
    _openrg(["transitions", "--L", "3", "--N", "3", "--g-grid", "0,2",
             "--out", "transitions.csv"], out)
    return out
