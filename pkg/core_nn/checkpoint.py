"""
Checkpoint persistence: JSON manifest plus a raw little-endian float64 blob.
"""
import json
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from loguru import logger
from pydantic import ValidationError

from core_nn.errors import CheckpointError
from core_nn.network import MlpSpec, ModelParams

FORMAT_NAME = 'mlp-checkpoint'
FORMAT_VERSION = 1
BLOB_DTYPE = '<f8'

PathLike = Union[str, Path]


def checkpoint_paths(path: PathLike) -> Tuple[Path, Path]:
    """Manifest and blob paths for a checkpoint stem, .json or .bin path"""
    path = Path(path)
    stem = path.with_suffix('') if path.suffix in ('.json', '.bin') else path
    return stem.with_name(stem.name + '.json'), stem.with_name(stem.name + '.bin')


def save_checkpoint(params: ModelParams, path: PathLike) -> Path:
    """
    Write params as <stem>.json and <stem>.bin

    Args:
        params: Parameters to persist
        path: Checkpoint stem (suffix optional)

    Returns:
        Path of the manifest
    """
    manifest_path, blob_path = checkpoint_paths(path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)

    manifest = {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'dtype': BLOB_DTYPE,
        'blob': blob_path.name,
        'spec': params.spec.model_dump(mode='json'),
        'lineage': params.lineage,
        'tensors': [{'name': name, 'shape': list(array.shape)}
                    for name, array in zip(params.names(), params.arrays())],
    }
    blob = b''.join(np.ascontiguousarray(array, dtype=BLOB_DTYPE).tobytes() for array in params.arrays())

    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    blob_path.write_bytes(blob)
    logger.info(f"Checkpoint saved to {manifest_path}")
    return manifest_path


def load_checkpoint(path: PathLike) -> ModelParams:
    """
    Read a checkpoint written by save_checkpoint

    Args:
        path: Checkpoint stem, manifest or blob path

    Returns:
        Parameters, bit-identical to the saved ones
    """
    manifest_path, blob_path = checkpoint_paths(path)
    for required in (manifest_path, blob_path):
        if not required.is_file():
            raise CheckpointError(f"checkpoint file not found: {required}")

    try:
        manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
        spec = MlpSpec.model_validate(manifest['spec'])
        tensors = manifest['tensors']
    except (json.JSONDecodeError, KeyError, ValidationError) as e:
        raise CheckpointError(f"unreadable manifest {manifest_path}: {e}") from e

    if manifest.get('format') != FORMAT_NAME or manifest.get('dtype') != BLOB_DTYPE:
        raise CheckpointError(f"{manifest_path} is not a {FORMAT_NAME} manifest with dtype {BLOB_DTYPE}")

    expected = []
    for fan_out, fan_in in spec.layer_shapes():
        expected.extend(([fan_out, fan_in], [fan_out]))
    shapes = [list(entry['shape']) for entry in tensors]
    if shapes != expected:
        raise CheckpointError(f"tensor shapes {shapes} do not match spec {list(spec.layer_widths)}")

    values = np.frombuffer(blob_path.read_bytes(), dtype=BLOB_DTYPE)
    total = sum(int(np.prod(shape)) for shape in shapes)
    if values.size != total:
        raise CheckpointError(f"{blob_path} holds {values.size} values, manifest needs {total}")

    arrays, offset = [], 0
    for shape in shapes:
        count = int(np.prod(shape))
        arrays.append(values[offset:offset + count].astype(np.float64).reshape(shape))
        offset += count

    logger.debug(f"Checkpoint loaded from {manifest_path}")
    return ModelParams.from_arrays(spec, arrays, manifest.get('lineage', {}))
