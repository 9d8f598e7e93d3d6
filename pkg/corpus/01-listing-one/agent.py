from langchain.tools import tool


@tool
def analyze_data(expr: str) -> str:
    """Evaluate a pandas expression over the loaded frame."""
    return eval(expr)


def build_prompt(user_input: str) -> str:
    return f"You are a data analyst. {user_input}"
