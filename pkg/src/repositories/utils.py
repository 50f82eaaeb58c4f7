from typing import Any, Iterable, Sequence

import yaml

LINE_KEY = "__line__"


def compress_ranges(components: Iterable[int]) -> list[int | list[int]]:
    """
    Сжимает последовательность номеров в список из чисел и отрезков [lo, hi].

    Отрезком становится только подряд идущая возрастающая серия длиной не меньше трёх,
    порядок элементов сохраняется.

    Пример:
        compress_ranges([1, 2, 3, 7, 9, 10]) → [[1, 3], 7, 9, 10]
    """
    items = [int(c) for c in components]
    result: list[int | list[int]] = []
    start = 0
    while start < len(items):
        end = start
        while end + 1 < len(items) and items[end + 1] == items[end] + 1:
            end += 1
        if end - start >= 2:
            result.append([items[start], items[end]])
        else:
            result.extend(items[start:end + 1])
        start = end + 1
    return result


def expand_ranges(spec: Sequence[int | Sequence[int]]) -> list[int]:
    """
    Обратное к `compress_ranges`: отрезок [lo, hi] разворачивается в lo, lo+1, …, hi.

    Исключения:
    - ValueError: если отрезок пуст (hi < lo).
    """
    result = []
    for item in spec:
        if isinstance(item, int):
            result.append(item)
            continue
        lo, hi = item
        if hi < lo:
            raise ValueError(f"Пустой отрезок [{lo}, {hi}]")
        result.extend(range(lo, hi + 1))
    return result


class LineLoader(yaml.SafeLoader):
    """
    SafeLoader, добавляющий в каждый словарь ключ `__line__` с номером строки (с единицы).

    Номера используются в диагностике ошибок схемы, затем ключи удаляются `strip_lines`.
    """

    def construct_mapping(self, node, deep=False):
        mapping = super().construct_mapping(node, deep=deep)
        mapping[LINE_KEY] = node.start_mark.line + 1
        return mapping


def strip_lines(data: Any) -> Any:
    if isinstance(data, dict):
        return {key: strip_lines(value) for key, value in data.items() if key != LINE_KEY}
    if isinstance(data, list):
        return [strip_lines(item) for item in data]
    return data


def locate_line(data: Any, loc: Sequence[int | str]) -> int | None:
    """
    Номер строки ближайшего словаря по пути `loc` из ошибки pydantic.

    Ключи словарей в YAML могут быть целыми, а в `loc` они бывают строками — пробуются оба.
    """
    line = data.get(LINE_KEY) if isinstance(data, dict) else None
    node = data
    for key in loc:
        if isinstance(node, dict):
            if key not in node and isinstance(key, str) and key.lstrip("-").isdigit():
                key = int(key)
            if key not in node:
                break
            node = node[key]
        elif isinstance(node, list) and isinstance(key, int) and 0 <= key < len(node):
            node = node[key]
        else:
            break
        if isinstance(node, dict) and LINE_KEY in node:
            line = node[LINE_KEY]
    return line
