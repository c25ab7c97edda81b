"""Regenerate the shipped pool files from their published seeds.

    python scripts/make_pools.py
"""

from pathlib import Path

from partysolve.persistence import PoolSpec, dumps_pool, generate_pool

TEMPLATES = Path(__file__).resolve().parents[1] / "src" / "partysolve" / "templates"

# name -> (pool size, generator seed)
POOLS = {
    "pool_m500": (500, 7),
    "pool_tiny": (12, 3),
}


def main():
    for name, (size, seed) in POOLS.items():
        path = TEMPLATES / f"{name}.json"
        path.write_text(dumps_pool(generate_pool(PoolSpec(size=size), seed)), encoding="utf-8")
        print(f"{path}: {size} items, seed {seed}")


if __name__ == "__main__":
    main()
