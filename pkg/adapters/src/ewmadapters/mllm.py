"""Client for the video-description endpoint, plus the prompt assets.

The endpoint is any HTTP service that accepts a JSON POST
``{"kind", "prompt", "video", "frames"}`` and answers per kind:

* ``global_caption`` -> ``{"text": "..."}``
* ``step_captions``  -> ``{"steps": ["...", ...]}``
* ``logic``          -> ``{"verdict": "pass"|"violation", "tags": [...]}``

Transport failures are retried with exponential backoff; a reply that
arrives but fails validation is rejected immediately, since resending the
same prompt would not fix it.  Prompt templates live under ``templates/v{n}``
as plain text so a template change is a visible, versioned diff.
"""

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .errors import EndpointFailure, SchemaViolation, UsageError

TEMPLATE_VERSION = 1
SIDECAR_SCHEMA_VERSION = 1

# tasks decompose into this many atomic steps; mirrored by the manifest schema
MIN_STEPS = 4
MAX_STEPS = 10

_TEMPLATE_NAMES = ("generation_suffix", "global_caption", "step_captions", "logic_check")


def templates_dir(version: int = TEMPLATE_VERSION) -> Path:
    root = Path(__file__).parent / "templates" / f"v{version}"
    if not root.is_dir():
        raise UsageError(f"no template set for version {version}")
    return root


def load_template(name: str, version: int = TEMPLATE_VERSION) -> str:
    if name not in _TEMPLATE_NAMES:
        raise UsageError(f"unknown template '{name}' (available: {', '.join(_TEMPLATE_NAMES)})")
    return (templates_dir(version) / f"{name}.txt").read_text(encoding="utf-8").strip()


def generation_prompt(instruction: str, version: int = TEMPLATE_VERSION) -> str:
    """Compose a generation prompt: the task instruction plus the fixed
    viewpoint suffix that pins the camera and the first frame."""
    instruction = " ".join(str(instruction).split())
    if not instruction:
        raise UsageError("instruction is empty")
    return f"{instruction} {load_template('generation_suffix', version)}"


@dataclass(frozen=True)
class MllmClient:
    endpoint: str
    timeout: float = 10.0
    max_retries: int = 3
    backoff: float = 0.5

    def __post_init__(self):
        if self.max_retries < 1:
            raise UsageError(f"max_retries must be >= 1, got {self.max_retries}")
        if self.backoff < 0:
            raise UsageError(f"backoff must be >= 0, got {self.backoff}")

    def request(self, payload: dict) -> dict:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        last = None
        for attempt in range(self.max_retries):
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    raw = resp.read()
                break
            except urllib.error.HTTPError as exc:
                if 400 <= exc.code < 500:
                    raise EndpointFailure(
                        f"endpoint rejected the request ({exc.code} {exc.reason})"
                    ) from exc
                last = f"{exc.code} {exc.reason}"
            except (urllib.error.URLError, OSError) as exc:
                last = str(exc)
            if attempt + 1 < self.max_retries:
                time.sleep(self.backoff * 2**attempt)
        else:
            raise EndpointFailure(
                f"endpoint unreachable after {self.max_retries} attempts: {last}"
            )
        try:
            reply = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SchemaViolation(f"endpoint reply is not JSON: {exc}") from exc
        if not isinstance(reply, dict):
            raise SchemaViolation(f"endpoint reply must be a JSON object, got {type(reply).__name__}")
        return reply


def _clean_str(value, what: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaViolation(f"{what} must be a non-empty string, got {value!r}")
    return " ".join(value.split())


def validate_caption_reply(reply: dict) -> str:
    return _clean_str(reply.get("text"), "'text'")


def validate_steps_reply(reply: dict) -> list[str]:
    steps = reply.get("steps")
    if not isinstance(steps, list) or not steps:
        raise SchemaViolation(f"'steps' must be a non-empty list, got {steps!r}")
    if len(steps) > MAX_STEPS * 2:
        raise SchemaViolation(f"{len(steps)} steps is past any plausible decomposition")
    return [_clean_str(s, f"step {i}") for i, s in enumerate(steps)]


def validate_logic_reply(reply: dict) -> tuple[str, list[str]]:
    verdict = reply.get("verdict")
    if verdict not in ("pass", "violation"):
        raise SchemaViolation(f"'verdict' must be 'pass' or 'violation', got {verdict!r}")
    tags = reply.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise SchemaViolation(f"'tags' must be a list of strings, got {tags!r}")
    return verdict, [" ".join(t.split()) for t in tags]


def describe_video(
    client: MllmClient, video_name: str, frame_count: int, version: int = TEMPLATE_VERSION
) -> dict:
    """Run the three description prompts and assemble one validated record."""
    base = {"video": video_name, "frames": int(frame_count)}
    caption = validate_caption_reply(
        client.request({**base, "kind": "global_caption", "prompt": load_template("global_caption", version)})
    )
    steps = validate_steps_reply(
        client.request(
            {
                **base,
                "kind": "step_captions",
                "prompt": load_template("step_captions", version).format(
                    min_steps=MIN_STEPS, max_steps=MAX_STEPS
                ),
            }
        )
    )
    verdict, tags = validate_logic_reply(
        client.request({**base, "kind": "logic", "prompt": load_template("logic_check", version)})
    )
    return {
        "global_caption": caption,
        "step_captions": steps,
        "verdict": verdict,
        "tags": tags,
    }
