"""
MCAR 欠損の注入

全セルから一様に非復元抽出する。ただし行・列が丸ごと欠損にならないよう、
その制約を破るセルは飛ばして次の候補を引く。
"""

import math
from dataclasses import dataclass

import numpy as np

from imputers.errors import DataError, InfeasibleRateError
from imputers.models import Dataset

MAX_RESHUFFLES = 32


@dataclass(frozen=True)
class MissingMask:
    """取り除いたセルの集合"""

    cells: tuple[tuple[int, int], ...]  # (row, column) の昇順
    rate: float
    seed: int

    def __len__(self) -> int:
        return len(self.cells)

    def as_array(self, n: int, d: int) -> np.ndarray:
        mask = np.zeros((n, d), dtype=bool)
        for i, r in self.cells:
            mask[i, r] = True
        return mask


def target_count(rate: float, n: int, d: int) -> int:
    """round(rate * n * d)（四捨五入）"""
    return int(math.floor(rate * n * d + 0.5))


def inject_missing(dataset: Dataset, rate: float, seed: int) -> tuple[Dataset, MissingMask]:
    """完全なデータセットに欠損率 rate の MCAR 欠損を入れる"""
    if not 0 < rate < 1:
        raise InfeasibleRateError(f"missing rate {rate} must be strictly between 0 and 1")
    if not dataset.is_complete:
        raise DataError("missingness can only be injected into a complete dataset")

    n, d = dataset.n, dataset.d
    total = target_count(rate, n, d)
    if total == 0:
        return dataset, MissingMask(cells=(), rate=rate, seed=seed)

    limit = min(n * (d - 1), d * (n - 1))
    if total > limit:
        raise InfeasibleRateError(
            f"rate {rate} needs {total} missing cells but at most {limit} keep every "
            f"row and column non-empty ({n}x{d})"
        )

    rng = np.random.default_rng(seed)
    for _ in range(MAX_RESHUFFLES):
        row_left = np.full(n, d)
        col_left = np.full(d, n)
        chosen: list[tuple[int, int]] = []
        for cell in rng.permutation(n * d):
            i, r = divmod(int(cell), d)
            if row_left[i] > 1 and col_left[r] > 1:
                row_left[i] -= 1
                col_left[r] -= 1
                chosen.append((i, r))
                if len(chosen) == total:
                    break
        if len(chosen) == total:
            break
    else:
        raise InfeasibleRateError(f"could not place {total} missing cells in {n}x{d} table")

    cells = tuple(sorted(chosen))
    values = dataset.values.copy()
    for i, r in cells:
        values[i, r] = np.nan
    return dataset.with_values(values), MissingMask(cells=cells, rate=rate, seed=seed)
