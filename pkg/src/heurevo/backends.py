"""Response sampling backends and heuristic parsing.

Three interchangeable backends produce the G candidate texts for a prompt:
an OpenAI-style chat-completion HTTP client, a replay backend that serves
a recorded corpus keyed by (round, slot) for bit-reproducible runs, and a
scripted mock for tests.
"""

from __future__ import annotations

import ast
import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .operators import PromptBundle


class BackendError(Exception):
    pass


class ReplayExhaustedError(BackendError):
    """The replay corpus has no entry for a requested (round, slot)."""


@dataclass
class BackendConfig:
    kind: str = "mock"  # http | replay | mock
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "HEUREVO_API_KEY"
    temperature: float = 1.0
    max_tokens: int = 2048
    timeout_s: float = 60.0
    retries: int = 2
    corpus_path: Optional[str] = None
    scripted: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("http", "replay", "mock"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "replay" and not self.corpus_path:
            raise ValueError("replay backend needs corpus_path")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http backend needs an endpoint")


@dataclass(frozen=True)
class SignatureSpec:
    """Expected function name and positional arity for a problem."""

    name: str
    arity: int


@dataclass(frozen=True)
class ParseResult:
    idea: Optional[str]
    code: Optional[str]
    function_name: Optional[str]
    raw: str


_FENCE_RE = re.compile(r"```[ \t]*(?:[Pp]ython)?[ \t]*\r?\n(.*?)```", re.DOTALL)
_DOCSTRING_RE = re.compile(r'^\s*(?:"""(.*?)"""|\'\'\'(.*?)\'\'\')', re.DOTALL)


def parse_heuristic(response: str, signature: SignatureSpec) -> ParseResult:
    """Split a raw response into idea, code, and a validated function name.

    The idea is the leading documentation block inside the code when
    present, otherwise the prose preceding the code fence. The function
    name is only reported when the code parses and contains a function
    matching the expected name and arity.
    """
    if not isinstance(response, str):
        response = str(response)
    code: Optional[str] = None
    prose: Optional[str] = None
    match = _FENCE_RE.search(response)
    if match:
        code = match.group(1).strip() or None
        prose = response[: match.start()].strip() or None
    else:
        prose = response.strip() or None

    idea: Optional[str] = None
    if code:
        doc = _DOCSTRING_RE.match(code)
        if doc:
            idea = (doc.group(1) or doc.group(2) or "").strip() or None
    if idea is None:
        idea = prose

    function_name: Optional[str] = None
    if code:
        try:
            tree = ast.parse(code)
        except (SyntaxError, ValueError, MemoryError, RecursionError):
            tree = None
        if tree is not None:
            for node in tree.body:
                if isinstance(node, ast.FunctionDef) and node.name == signature.name:
                    args = node.args
                    arity = len(args.posonlyargs) + len(args.args)
                    if arity == signature.arity:
                        function_name = node.name
                        break
    return ParseResult(idea=idea, code=code, function_name=function_name, raw=response)


class ScriptedBackend:
    """Serves canned texts in order; cycles when exhausted."""

    def __init__(self, texts: Sequence[str]):
        if not texts:
            raise ValueError("scripted backend needs at least one text")
        self._texts = list(texts)
        self._cursor = 0

    def sample(self, prompt: PromptBundle, group_size: int) -> list[str]:
        out = []
        for _ in range(group_size):
            out.append(self._texts[self._cursor % len(self._texts)])
            self._cursor += 1
        return out


class ReplayBackend:
    """Replays a recorded corpus of {round, slot, text} JSON lines."""

    def __init__(self, corpus_path: str | Path):
        self._entries: dict[tuple[int, int], str] = {}
        path = Path(corpus_path)
        with path.open(encoding="utf-8") as fp:
            for line_no, line in enumerate(fp, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    key = (int(record["round"]), int(record["slot"]))
                    self._entries[key] = str(record["text"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise BackendError(f"bad corpus record at line {line_no}: {exc}") from exc

    def sample(self, prompt: PromptBundle, group_size: int) -> list[str]:
        out = []
        for slot in range(group_size):
            key = (prompt.round, slot)
            if key not in self._entries:
                raise ReplayExhaustedError(f"corpus has no entry for round={key[0]} slot={key[1]}")
            out.append(self._entries[key])
        return out


class HttpBackend:
    """OpenAI-style chat-completion client, one request per response slot.

    Each slot retries up to the configured budget; a slot that still fails
    yields an empty text, which the diagnosis ladder downstream maps to the
    most-penalized failure. A slot never blocks longer than
    timeout * (retries + 1).
    """

    def __init__(self, cfg: BackendConfig, transport: Optional[httpx.BaseTransport] = None):
        api_key = os.environ.get(cfg.api_key_env, "")
        if not api_key and transport is None:
            raise BackendError(f"missing API key: set ${cfg.api_key_env}")
        self._cfg = cfg
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(
            timeout=cfg.timeout_s,
            transport=transport,
            headers=self._headers,
        )

    def _one_request(self, prompt: PromptBundle) -> str:
        payload = {
            "model": self._cfg.model,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
            "temperature": self._cfg.temperature,
            "max_tokens": self._cfg.max_tokens,
        }
        for _ in range(self._cfg.retries + 1):
            try:
                resp = self._client.post(self._cfg.endpoint, json=payload)
                resp.raise_for_status()
                body = resp.json()
                return str(body["choices"][0]["message"]["content"])
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError, json.JSONDecodeError):
                continue
        return ""

    def sample(self, prompt: PromptBundle, group_size: int) -> list[str]:
        if group_size == 1:
            return [self._one_request(prompt)]
        with ThreadPoolExecutor(max_workers=group_size) as pool:
            futures = [pool.submit(self._one_request, prompt) for _ in range(group_size)]
            return [f.result() for f in futures]

    def close(self) -> None:
        self._client.close()


def make_backend(cfg: BackendConfig, transport: Optional[httpx.BaseTransport] = None):
    if cfg.kind == "replay":
        return ReplayBackend(cfg.corpus_path)
    if cfg.kind == "http":
        return HttpBackend(cfg, transport=transport)
    return ScriptedBackend(cfg.scripted or [""])


def sample_responses(backend, prompt: PromptBundle, group_size: int) -> list[str]:
    """Fetch exactly ``group_size`` texts for a prompt, in slot order."""
    if group_size < 1:
        raise ValueError("group size must be >= 1")
    texts = backend.sample(prompt, group_size)
    if len(texts) != group_size:
        raise BackendError(f"backend returned {len(texts)} texts, wanted {group_size}")
    return texts
