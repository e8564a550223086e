"""Pluggable language detection for home-page text.

The default detector scores stopword hits for twelve languages. Words
shared by several languages count fractionally, so ``de`` (Dutch,
Catalan, Portuguese) does not swamp a decision the way ``the`` would.
"""

from __future__ import annotations

import logging
import re
from collections import defaultdict
from typing import Callable, Protocol

from .model import EepsiteId

logger = logging.getLogger(__name__)

UNKNOWN = "UNKNOWN"

STOPWORDS: dict[str, tuple[str, ...]] = {
    "en": ("the", "and", "of", "to", "is", "in", "that", "it", "with", "for", "was", "on",
           "are", "as", "this", "be", "at", "by", "from", "have", "you", "not", "which", "or",
           "but", "they", "we", "an", "has", "will", "over", "all", "their", "been", "would"),
    "fr": ("le", "la", "les", "et", "est", "des", "une", "du", "que", "qui", "dans", "pour",
           "pas", "sur", "au", "avec", "ce", "il", "sont", "plus", "nous", "vous", "mais",
           "ou", "leur", "cette", "aux", "être", "ils", "fait"),
    "de": ("der", "die", "und", "das", "ist", "nicht", "mit", "den", "ein", "eine", "zu",
           "von", "auf", "sich", "für", "dem", "auch", "es", "wir", "ich", "sind", "wird",
           "oder", "aber", "noch", "wie", "bei", "nach", "über", "werden"),
    "es": ("el", "los", "las", "y", "es", "del", "que", "en", "un", "una", "por", "con",
           "para", "como", "pero", "sus", "más", "este", "esta", "fue", "son", "muy",
           "también", "hay", "porque", "cuando", "desde", "todo", "ser", "lo"),
    "no": ("og", "er", "ikke", "det", "som", "jeg", "til", "med", "har", "av", "på", "en",
           "et", "for", "den", "vi", "kan", "skal", "fra", "hun", "han", "var", "deg", "meg",
           "hva", "eller", "være", "noen", "hvor", "ble"),
    "la": ("et", "est", "in", "non", "ad", "cum", "quod", "sed", "ut", "qui", "quae", "esse",
           "enim", "etiam", "atque", "ab", "ex", "nec", "sunt", "hoc", "quam", "autem", "vel",
           "neque", "tamen", "ergo", "nihil", "eius", "inter", "omnia"),
    "it": ("il", "di", "che", "e", "la", "per", "un", "una", "non", "sono", "della", "con",
           "del", "gli", "le", "ma", "più", "anche", "questo", "come", "nel", "alla",
           "essere", "perché", "molto", "sua", "dei", "questa", "stato", "sempre"),
    "cy": ("y", "yr", "a", "ac", "yn", "i", "o", "ar", "mae", "ei", "am", "gan", "hyn",
           "wedi", "fel", "ond", "bod", "dros", "hefyd", "roedd", "gyda", "eu", "nid",
           "iawn", "pan", "fydd", "ni", "chi", "ydy", "oedd"),
    "tr": ("ve", "bir", "bu", "da", "de", "için", "ile", "çok", "ne", "daha", "gibi",
           "olarak", "kadar", "ama", "değil", "sonra", "var", "yok", "ben", "sen", "biz",
           "her", "şey", "olan", "veya", "mi", "ancak", "göre", "olduğu", "şu"),
    "pt": ("o", "a", "os", "as", "de", "do", "da", "dos", "das", "em", "um", "uma", "que",
           "não", "para", "com", "por", "mais", "como", "mas", "foi", "ao", "seu", "sua",
           "são", "também", "muito", "você", "isso", "ele"),
    "nl": ("de", "het", "een", "en", "van", "is", "niet", "dat", "op", "te", "zijn", "voor",
           "met", "ook", "maar", "om", "er", "wat", "als", "bij", "nog", "naar", "dan",
           "wordt", "kan", "hij", "deze", "ze", "zich", "werd"),
    "ca": ("el", "la", "els", "les", "i", "de", "que", "és", "en", "un", "una", "per", "amb",
           "no", "del", "als", "dels", "però", "més", "també", "aquest", "aquesta", "són",
           "seva", "molt", "perquè", "ja", "hi", "ho", "seu"),
}

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


def _weights() -> dict[str, dict[str, float]]:
    owners: dict[str, list[str]] = defaultdict(list)
    for lang, words in STOPWORDS.items():
        for w in set(words):
            owners[w].append(lang)
    return {w: {lang: 1.0 / len(langs) for lang in langs} for w, langs in owners.items()}


_WEIGHTS = _weights()


class Detector(Protocol):
    def detect(self, text: str, site: EepsiteId | None = None) -> str: ...


class StopwordDetector:
    """Stopword-frequency heuristic; returns ``UNKNOWN`` when undecided.

    A language wins when its score reaches ``min_score`` and beats the
    runner-up by ``margin`` (relative).
    """

    def __init__(self, min_score: float = 2.0, margin: float = 0.25):
        self.min_score = min_score
        self.margin = margin

    def detect(self, text: str, site: EepsiteId | None = None) -> str:
        scores: dict[str, float] = defaultdict(float)
        for token in _WORD_RE.findall(text.lower()):
            for lang, w in _WEIGHTS.get(token, {}).items():
                scores[lang] += w
        if not scores:
            return UNKNOWN
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        best_lang, best = ranked[0]
        runner_up = ranked[1][1] if len(ranked) > 1 else 0.0
        if best < self.min_score or best - runner_up < self.margin * best:
            return UNKNOWN
        return best_lang


class NullDetector:
    def detect(self, text: str, site: EepsiteId | None = None) -> str:
        return UNKNOWN


class LookupDetector:
    """Answers from a host -> language table (used with simulated networks)."""

    def __init__(self, table: dict[str, str] | Callable[[str], str | None]):
        self._lookup = table.get if isinstance(table, dict) else table

    def detect(self, text: str, site: EepsiteId | None = None) -> str:
        if site is None:
            return UNKNOWN
        return self._lookup(site.host) or UNKNOWN


def detect_language(text: str, detector: Detector | None = None,
                    site: EepsiteId | None = None) -> str:
    """Detect the language of ``text``; any detector fault yields ``UNKNOWN``."""
    detector = detector or StopwordDetector()
    if not text.strip() and not isinstance(detector, LookupDetector):
        return UNKNOWN
    try:
        lang = detector.detect(text, site)
    except Exception:  # a broken detector must never abort a crawl
        logger.warning("language detector failed for %s", site, exc_info=True)
        return UNKNOWN
    return lang or UNKNOWN
