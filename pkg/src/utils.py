import os
import json
import logging
from typing import Any, Optional

import networkx as nx
import pandas as pd
from networkx.readwrite import json_graph

logger = logging.getLogger(__name__)

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIO_DIR = os.path.join(REPO_ROOT, 'scenarios')
ENSEMBLE_DIR = os.path.join(REPO_ROOT, 'ensembles')


def scenario_path(name: str, directory: str = SCENARIO_DIR) -> str:
    """
    Path of a shipped scenario document.

    Parameters:
    name (str): Scenario name, with or without the '.json' suffix.
    directory (str): Directory holding the documents. Defaults to the repository's 'scenarios'.

    Returns:
    str: The path to the document.
    """
    if not name.endswith(".json"):
        name += ".json"
    return os.path.join(directory, name)


def load_json(file_path: str) -> Any:
    """
    Load a UTF-8 JSON document.

    Parameters:
    file_path (str): The path of the document. '.json' is appended when missing.

    Returns:
    Any: The parsed JSON tree.
    """
    if not file_path.endswith(".json") and not os.path.exists(file_path):
        file_path += ".json"

    with open(file_path, 'r', encoding='utf-8') as file:
        return json.load(file)


def dumps_json(data: Any) -> str:
    """Stable JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_json(data: Any, file_path: str) -> None:
    """
    Save a JSON tree to a UTF-8 file, creating the parent directory if needed.

    Parameters:
    data (Any): JSON-serializable tree.
    file_path (str): The output path.
    """
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)

    with open(file_path, "w", encoding='utf-8') as file:
        file.write(dumps_json(data))
    logger.info(f"Saved {file_path}")


def network_to_node_link(graph: nx.DiGraph) -> dict:
    """Node-link representation of a directed graph, as used for JSON export."""
    return json_graph.node_link_data(graph)


def save_network_to_json(graph: nx.DiGraph, file_path: str) -> None:
    """
    Save a NetworkX directed graph to a JSON file using node-link data format.

    Parameters:
    graph (nx.DiGraph): The directed graph to be saved.
    file_path (str): The output path. '.json' is appended when missing.
    """
    if not file_path.endswith(".json"):
        file_path += ".json"
    save_json(network_to_node_link(graph), file_path)


def frame_to_csv(df: pd.DataFrame) -> str:
    """CSV text of a table (RFC-4180 quoting, '\\n' line endings, no index)."""
    return df.to_csv(index=False, lineterminator="\n")


def write_text(text: str, file_path: Optional[str] = None) -> None:
    """Write a report to a file, or to stdout when no path is given."""
    if file_path is None:
        print(text, end="" if text.endswith("\n") else "\n")
        return
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(file_path, "w", encoding='utf-8', newline="") as file:
        file.write(text)
    logger.info(f"Report written to {file_path}")
