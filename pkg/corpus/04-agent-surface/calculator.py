from langchain.tools import tool


@tool
def calculator(expression: str) -> str:
    """Evaluate an arithmetic expression for the agent."""
    return str(eval(expression))
