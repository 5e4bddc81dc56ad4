"""Fixed prompt texts. They change scores, so every report fingerprints them."""

from __future__ import annotations

from dataclasses import asdict, dataclass

_LANG_NAMES = {"en": "English", "ar": "Egyptian Arabic"}


@dataclass(frozen=True)
class PromptTemplate:
    target_lang: str
    system_text: str
    user_pattern: str  # contains "{source}"

    def __post_init__(self):
        if "{source}" not in self.user_pattern:
            raise ValueError("user_pattern needs a {source} slot")

    def render(self, source: str) -> list[dict]:
        if not source.strip():
            raise ValueError("cannot render a prompt for an empty source")
        return [
            {"role": "system", "content": self.system_text},
            {"role": "user", "content": self.user_pattern.replace("{source}", source)},
        ]

    def to_dict(self) -> dict:
        return asdict(self)


def translation_template(target_lang: str) -> PromptTemplate:
    try:
        name = _LANG_NAMES[target_lang]
    except KeyError:
        raise ValueError(f"no translation template for target {target_lang!r}") from None
    return PromptTemplate(
        target_lang=target_lang,
        system_text="You are a professional translator.",
        user_pattern=(
            "Translate the following code-switched Egyptian Arabic-English sentence into "
            f"{name}. Reply with the translation only.\n\n{{source}}"
        ),
    )


@dataclass(frozen=True)
class GraderRubric:
    system_text: str
    user_pattern: str  # slots: {source} {hypothesis} {reference}
    max_attempts: int = 3

    def render(self, source: str, hypothesis: str, reference: str) -> list[dict]:
        user = (self.user_pattern.replace("{source}", source)
                .replace("{hypothesis}", hypothesis)
                .replace("{reference}", reference))
        return [{"role": "system", "content": self.system_text}, {"role": "user", "content": user}]

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_RUBRIC = GraderRubric(
    system_text="You are a strict bilingual evaluator of Egyptian Arabic and English translations.",
    user_pattern=(
        "Rate the candidate translation of the source sentence against the reference.\n"
        "Use an integer from 0 (irrelevant) to 10 (perfect meaning, fluent, culturally appropriate).\n"
        "Start your reply with the integer, then give one short sentence of justification.\n\n"
        "Source: {source}\n"
        "Reference: {reference}\n"
        "Candidate: {hypothesis}"
    ),
)
