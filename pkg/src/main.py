# ruff: noqa E402
import logging
import sys
from pathlib import Path

import typer

sys.path.append(str(Path(__file__).parent.parent))

from src.config import settings

logging.basicConfig(level=settings.LOG_LEVEL)


from src.cli.scenarios import generate
from src.cli.simulation import compare, run
from src.cli.verification import verify

# Создаем приложение командной строки
app = typer.Typer(
    help="Устойчивое распределённое восстановление поля: сценарии, моделирование, проверки.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

# Подключение команд
app.command("generate", help="Построить сценарий и записать его файл")(generate)
app.command("run", help="Моделирование восстановления поля")(run)
app.command("verify", help="Проверка предположений, устойчивости и оракула")(verify)
app.command("compare", help="Сравнение resilient и cirfe на одном сценарии")(compare)


if __name__ == "__main__":
    """
    Точка входа: `python -m src.main <команда>`.
    """
    app()
