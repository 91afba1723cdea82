"""
Запись и чтение результатов: CSV диагностики и бинарные снимки ψ, φ.

Формат снимка (версия 1, little-endian):

    b"PKSN" | версия (1 байт) | маркер 0xFEFF ('<H') | длина заголовка ('<I')
    | JSON-заголовок (UTF-8) | ψ ('<f8', C-порядок) | φ ('<f8')
"""
import csv
import json
import logging
import struct
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .exceptions import ConfigurationError, ProvenanceMismatch
from .modules.diagnostics import CSV_FIELDS, DiagnosticsRecord

logger = logging.getLogger(__name__)

CSV_VERSION = 1
SNAPSHOT_MAGIC = b"PKSN"
SNAPSHOT_VERSION = 1
ENDIAN_MARKER = 0xFEFF
_PREFIX = struct.Struct("<4sBHI")

PathLike = Union[str, Path]


def csv_header_line(config_hash: str) -> str:
    return f"# prionkinetics-diagnostics v{CSV_VERSION} config_sha256={config_hash}"


class DiagnosticsWriter:
    """Дописываемый CSV-файл диагностики с фиксированным заголовком."""

    def __init__(self, path: PathLike, config_hash: str):
        """
        Инициализация и запись заголовка.

        Аргументы:
            path: Путь к файлу
            config_hash: Хеш конфигурации расчета
        """
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.config_hash = config_hash
        self._handle = self.path.open("w", encoding="utf-8", newline="")
        self._handle.write(csv_header_line(config_hash) + "\n")
        self._writer = csv.DictWriter(self._handle, fieldnames=list(CSV_FIELDS), lineterminator="\n")
        self._writer.writeheader()
        self.rows = 0

    def append(self, record: Union[DiagnosticsRecord, Dict[str, Any]]) -> None:
        row = record.as_row() if isinstance(record, DiagnosticsRecord) else record
        self._writer.writerow({key: repr(float(value)) if key != "step" else int(value) for key, value in row.items()})
        self._handle.flush()
        self.rows += 1

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def read_diagnostics(path: PathLike, expected_hash: Optional[str] = None) -> Tuple[str, List[Dict[str, float]]]:
    """
    Чтение CSV диагностики.

    Аргументы:
        path: Путь к файлу
        expected_hash: Ожидаемый хеш конфигурации; None - без проверки

    Возвращает:
        Кортеж (хеш конфигурации, строки)

    Вызывает:
        ConfigurationError: Если заголовок не распознан
        ProvenanceMismatch: Если хеш не совпадает с ожидаемым
    """
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        first = handle.readline().strip()
        prefix = f"# prionkinetics-diagnostics v{CSV_VERSION} config_sha256="
        if not first.startswith(prefix):
            raise ConfigurationError(f"Неизвестный заголовок файла диагностики: {first!r}", "bad_csv")
        found = first[len(prefix):]
        _check_hash(found, expected_hash, path)
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ConfigurationError(f"Неожиданные колонки диагностики в {path}", "bad_csv")
        rows = [{key: (int(value) if key == "step" else float(value)) for key, value in row.items()} for row in reader]
    return found, rows


@dataclass
class Snapshot:
    """Прочитанный снимок полей."""

    header: Dict[str, Any]
    psi: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def config_hash(self) -> str:
        return self.header["config_sha256"]


def write_snapshot(path: PathLike, psi: np.ndarray, phi: np.ndarray, meta: Dict[str, Any]) -> Path:
    """
    Запись снимка в бинарном формате.

    Аргументы:
        path: Путь к файлу
        psi: Поле ψ формы (n_r, n_eta, n_y)
        phi: Поле φ формы (n_y,)
        meta: Поля заголовка (alpha, step, t, config_sha256, ...)

    Возвращает:
        Путь к записанному файлу
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    psi = np.ascontiguousarray(psi, dtype="<f8")
    phi = np.ascontiguousarray(phi, dtype="<f8")
    header = dict(meta, psi_shape=list(psi.shape), phi_shape=list(phi.shape), dtype="<f8")
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    with path.open("wb") as handle:
        handle.write(_PREFIX.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, ENDIAN_MARKER, len(encoded)))
        handle.write(encoded)
        handle.write(psi.tobytes(order="C"))
        handle.write(phi.tobytes(order="C"))
    return path


def read_snapshot(path: PathLike, expected_hash: Optional[str] = None) -> Snapshot:
    """
    Чтение снимка с проверкой формата и происхождения.

    Аргументы:
        path: Путь к файлу
        expected_hash: Ожидаемый хеш конфигурации; None - без проверки

    Возвращает:
        Snapshot

    Вызывает:
        ConfigurationError: Если формат, версия или порядок байтов не распознаны
        ProvenanceMismatch: Если хеш не совпадает с ожидаемым
    """
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise ConfigurationError(f"Файл {path} слишком короткий для снимка", "bad_snapshot")
    magic, version, marker, length = _PREFIX.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"Файл {path} не является снимком", "bad_snapshot")
    if version != SNAPSHOT_VERSION:
        raise ConfigurationError(f"Неподдерживаемая версия снимка: {version}", "bad_snapshot")
    if marker != ENDIAN_MARKER:
        raise ConfigurationError(f"Неверный маркер порядка байтов: {marker:#06x}", "bad_snapshot")

    offset = _PREFIX.size
    header = json.loads(data[offset:offset + length].decode("utf-8"))
    offset += length
    _check_hash(header.get("config_sha256", ""), expected_hash, path)

    psi_shape = tuple(header["psi_shape"])
    phi_shape = tuple(header["phi_shape"])
    n_psi = int(np.prod(psi_shape))
    n_phi = int(np.prod(phi_shape))
    if len(data) - offset != 8 * (n_psi + n_phi):
        raise ConfigurationError(f"Размер данных снимка {path} не совпадает с заголовком", "bad_snapshot")
    values = np.frombuffer(data, dtype="<f8", offset=offset)
    psi = values[:n_psi].reshape(psi_shape).astype(float)
    phi = values[n_psi:].reshape(phi_shape).astype(float)
    return Snapshot(header, psi, phi)


def _check_hash(found: str, expected: Optional[str], path: Any) -> None:
    if expected is not None and found != expected:
        raise ProvenanceMismatch(
            f"Файл {path} получен из другой конфигурации: {found[:12]} != {expected[:12]}",
            "provenance_mismatch",
            {"found": found, "expected": expected},
        )


def compare_snapshots(first: PathLike, second: PathLike) -> float:
    """
    Максимальное расхождение двух снимков одной конфигурации.

    Вызывает:
        ProvenanceMismatch: Если снимки получены из разных конфигураций
    """
    a = read_snapshot(first)
    b = read_snapshot(second, expected_hash=a.config_hash)
    if a.psi.shape != b.psi.shape or a.phi.shape != b.phi.shape:
        raise ConfigurationError("Снимки заданы на разных сетках", "shape_mismatch")
    return float(max(np.max(np.abs(a.psi - b.psi), initial=0.0), np.max(np.abs(a.phi - b.phi), initial=0.0)))


class SnapshotWriter:
    """
    Асинхронная запись снимков одним фоновым потоком.

    Массивы копируются при постановке в очередь; barrier() дожидается
    завершения всех записей и пробрасывает их ошибки.
    """

    def __init__(self, directory: PathLike, config_hash: str):
        self.directory = Path(directory)
        self.config_hash = config_hash
        self._pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix="snapshot")
        self._pending: List[Future] = []
        self.written: List[Path] = []

    def submit(self, psi: np.ndarray, phi: np.ndarray, step: int, t: float, alpha: float) -> Future:
        path = self.directory / f"snapshot_{step:06d}.pksn"
        meta = {"alpha": alpha, "step": int(step), "t": float(t), "config_sha256": self.config_hash}
        future = self._pool.submit(write_snapshot, path, np.array(psi, copy=True), np.array(phi, copy=True), meta)
        self._pending.append(future)
        logger.debug(f"Снимок шага {step} поставлен в очередь: {path}")
        return future

    def barrier(self) -> None:
        pending, self._pending = self._pending, []
        for future in pending:
            self.written.append(future.result())

    def close(self) -> None:
        try:
            self.barrier()
        finally:
            self._pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
