"""Access to the bundled data files (preamble, worlds, policies, fixtures)."""

from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    path = DATA_DIR / name
    if not path.exists():
        raise FileNotFoundError(f"no bundled data file named '{name}'")
    return path


def load_preamble() -> str:
    return data_path("preamble.txt").read_text(encoding="utf-8")
