"""
例外定義

CLI の終了コードに対応する例外階層。
- 1: 使い方の誤り（CLI 側で判定）
- 2: データの誤り（スキーマ・CSV・欠損率など）
- 3: 内部不変条件の破綻
"""


class HmviError(Exception):
    """パッケージ共通の基底例外"""

    exit_code = 2


class SchemaError(HmviError, ValueError):
    """スキーマファイルの誤り"""


class DataError(HmviError, ValueError):
    """データファイル・データセットの誤り"""


class InfeasibleRateError(DataError):
    """行・列の非空制約の下で実現できない欠損率"""


class InvariantError(HmviError, RuntimeError):
    """内部不変条件の破綻（黙って壊れたデータを返さない）"""

    exit_code = 3
