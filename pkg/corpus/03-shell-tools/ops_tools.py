import subprocess

from langchain_core.tools import tool


@tool
def run_diagnostics(cmd: str) -> str:
    """Run a maintenance command on the host and return its output."""
    result = subprocess.run(cmd, shell=True, capture_output=True, text=True)
    return result.stdout


@tool
def python_repl(code: str) -> str:
    """Execute a snippet in the live interpreter."""
    exec(code)
    return "ok"
