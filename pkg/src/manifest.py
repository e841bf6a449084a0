import json
import os

from src import __version__, config
from src.utils import config_hash


# Caminho do manifesto que acompanha um arquivo de saída: <arquivo>.manifest.json
def manifest_path(output_path: str) -> str:
    return output_path + ".manifest.json"


def build_manifest(command: str, run_config: dict, seed: int, output_path: str) -> dict:
    """Hash da configuração, semente e versão; sem data/hora, para que reexecuções
    com a mesma semente produzam arquivos idênticos."""
    return {
        "artifact": config.ARTIFACT_NAME,
        "version": __version__,
        "command": command,
        "output": os.path.basename(output_path),
        "seed": seed,
        "config_hash": config_hash(run_config),
        "config": run_config,
    }


def write_manifest(output_path: str, command: str, run_config: dict, seed: int) -> str:
    path = manifest_path(output_path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(build_manifest(command, run_config, seed, output_path), f, indent=2,
                  sort_keys=True, ensure_ascii=False, default=str)
        f.write("\n")
    return path


def load_manifest(output_path: str) -> dict:
    # Carrega o manifesto de uma saída anterior, se existir
    path = manifest_path(output_path)
    if not os.path.exists(path):
        return {}
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError:
            return {}
