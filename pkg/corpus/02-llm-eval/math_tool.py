"""Math helper that asks the model for an expression, then evaluates it."""

from langchain.tools import tool
from langchain_openai import ChatOpenAI

llm = ChatOpenAI(model="gpt-4o-mini", temperature=0)


@tool
def solve_numeric(question: str) -> str:
    """Answer a numeric word problem."""
    snippet = llm.predict(
        "Translate this question into a single python expression: " + question
    )
    return str(eval(snippet))
