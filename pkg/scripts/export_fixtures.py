"""Regenerate the JSON fixtures shipped in src/pulse_efficient/data."""

import argparse
import json
from pathlib import Path

from pulse_efficient.backends import DEVICE_PAIRS, fixture_name, line_backend, mumbai_backend, device_pair_backend
from pulse_efficient.qaoa import desk_graph, line_example_circuit, mumbai_graph
from pulse_efficient.transpile import DEFAULT_COSTS

DATA = Path(__file__).resolve().parents[1] / "src" / "pulse_efficient" / "data"


def fixtures() -> dict[str, dict]:
    out = {}
    for dev, pair, *_ in DEVICE_PAIRS:
        name = fixture_name(dev, pair)
        out[f"backends/{name}.json"] = device_pair_backend(dev, pair).to_json()
    out["backends/line-10.json"] = line_backend(10).to_json()
    out["backends/mumbai-27.json"] = mumbai_backend().to_json()
    out["line_example.json"] = line_example_circuit().to_json()
    out["mumbai_graph.json"] = mumbai_graph().to_json()
    out["desk_graph.json"] = desk_graph().to_json()
    out["cost_model_default.json"] = {"weights": DEFAULT_COSTS, "default": 100}
    return out


def dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--check", action="store_true", help="fail if any file on disk differs")
    args = ap.parse_args()
    stale = []
    for rel, obj in fixtures().items():
        path = DATA / rel
        text = dump(obj)
        if args.check:
            if not path.exists() or path.read_text() != text:
                stale.append(rel)
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}")
    if stale:
        raise SystemExit(f"stale fixtures: {', '.join(stale)}")


if __name__ == "__main__":
    main()
