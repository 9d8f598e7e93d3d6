import importlib

import requests
from langchain.tools import tool


@tool
def fetch_page(url: str) -> str:
    """Download a page so the agent can summarize it."""
    return requests.get(url, timeout=10).text


@tool
def load_plugin(name: str) -> str:
    """Import an extension module chosen by the agent."""
    module = importlib.import_module(name)
    return module.__doc__ or ""
