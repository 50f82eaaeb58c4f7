from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from src.repositories.base import BaseRepository
from src.repositories.mappers.mappers import IterationMetricsDataMapper
from src.schemas.recovery import HyperParams, IterationMetrics
from src.schemas.scenario import SimulationTrace

ERROR_COLUMNS = ["consensus_error", "average_error", "max_local_rmse"]


def _hyperparams_header(hp: HyperParams) -> str:
    return ", ".join(f"{key}={value:g}" for key, value in hp.model_dump().items())


class TracesRepository(BaseRepository):
    """
    Репозиторий трасс моделирования: CSV трассы, CSV рядов ошибок, CSV сравнения
    алгоритмов и YAML-сводка запуска.
    """

    mapper = IterationMetricsDataMapper

    def _header(self, trace: SimulationTrace) -> dict[str, str]:
        return {
            "digest": trace.digest,
            "algorithm": trace.algorithm.value,
            "hyperparams": _hyperparams_header(trace.hyperparams),
            "iterations": str(trace.iterations),
        }

    def add(self, trace: SimulationTrace, name: str = "trace.csv") -> Path:
        """Трасса `iteration,max_normalized_rmse,algorithm` с заголовком-комментарием."""
        frame = pd.DataFrame({
            "iteration": [row.iteration for row in trace.metrics],
            "max_normalized_rmse": trace.column("max_normalized_rmse"),
            "algorithm": trace.algorithm.value,
        })
        return self.write_csv(frame, name, self._header(trace))

    def add_errors(self, trace: SimulationTrace, tau: float | None = None, name: str = "errors.csv") -> Path:
        """
        Ряды ошибок: `iteration,consensus_error,average_error,max_local_rmse,gamma,max_innovation`.

        Если задан τ, добавляются столбцы `<ряд>_scaled` = (t+1)^τ·значение, а τ записывается
        в заголовок.
        """
        iterations = np.array([row.iteration for row in trace.metrics], dtype=float)
        frame = pd.DataFrame({"iteration": iterations.astype(np.int64)})
        for column in ERROR_COLUMNS + ["gamma", "max_innovation"]:
            frame[column] = trace.column(column)
        header = self._header(trace)
        if tau is not None:
            weights = (iterations + 1.0) ** tau
            for column in ERROR_COLUMNS:
                frame[f"{column}_scaled"] = frame[column] * weights
            header["tau"] = f"{tau:g}"
        return self.write_csv(frame, name, header)

    def add_comparison(
        self, resilient: SimulationTrace, cirfe: SimulationTrace, name: str = "compare.csv"
    ) -> Path:
        """Сравнение `iteration,max_normalized_rmse_resilient,max_normalized_rmse_cirfe`."""
        frame = pd.DataFrame({
            "iteration": [row.iteration for row in resilient.metrics],
            "max_normalized_rmse_resilient": resilient.column("max_normalized_rmse"),
            "max_normalized_rmse_cirfe": cirfe.column("max_normalized_rmse"),
        })
        header = {
            "digest_resilient": resilient.digest,
            "digest_cirfe": cirfe.digest,
            "hyperparams": _hyperparams_header(resilient.hyperparams),
        }
        return self.write_csv(frame, name, header)

    def add_summary(self, summary: dict, name: str = "summary.yaml") -> Path:
        path = self.target(name)
        path.write_text(yaml.safe_dump(summary, sort_keys=False, allow_unicode=True), encoding="utf-8")
        return path

    def get_metrics(self, path: Path) -> list[IterationMetrics]:
        """Читает CSV рядов ошибок обратно в строки метрик (нормированная ошибка берётся из трассы рядом)."""
        frame = self.read_csv(path)
        trace_path = Path(path).with_name("trace.csv")
        if trace_path.exists() and "max_normalized_rmse" not in frame:
            frame = frame.merge(
                self.read_csv(trace_path)[["iteration", "max_normalized_rmse"]], on="iteration"
            )
        records = frame.to_dict(orient="records")
        return [self.mapper.map_to_domain_entity(record) for record in records]

    def add_snapshots(self, trace: SimulationTrace, interests, name: str = "snapshots.csv") -> Path:
        """
        Снимки состояний в длинном формате `iteration,agent,component,estimate`.

        Параметры:
        - interests: Множества интересов агентов (нумерация компонентов с единицы).
        """
        frames = [
            pd.DataFrame({
                "iteration": t,
                "agent": n,
                "component": np.asarray(interest.components, dtype=np.int64),
                "estimate": x_n,
            })
            for t, states in trace.snapshots.items()
            for n, (x_n, interest) in enumerate(zip(states, interests), start=1)
        ]
        return self.write_csv(pd.concat(frames, ignore_index=True), name, self._header(trace))
