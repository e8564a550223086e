import pytest

from eepcrawl.language import (STOPWORDS, UNKNOWN, LookupDetector, NullDetector, StopwordDetector,
                               detect_language)
from eepcrawl.model import EepsiteId


@pytest.mark.parametrize("text, lang", [
    ("The service is down for maintenance and will be back at the end of the week.", "en"),
    ("Le site est en maintenance et il sera de retour dans une semaine pour les membres.", "fr"),
    ("Die Seite ist nicht erreichbar und wird auch bei uns noch über eine Woche dauern.", "de"),
    ("El foro de la comunidad está en mantenimiento y por eso no hay nuevos mensajes para los usuarios.", "es"),
])
def test_stopword_detector(text, lang):
    assert detect_language(text) == lang


def test_every_vocabulary_is_self_detected():
    for lang, words in STOPWORDS.items():
        text = " ".join(words * 3)
        assert StopwordDetector().detect(text) == lang, lang


def test_undecided_and_empty_text_are_unknown():
    assert detect_language("") == UNKNOWN
    assert detect_language("   \n") == UNKNOWN
    assert detect_language("12345 ### !!!") == UNKNOWN
    assert detect_language("the") == UNKNOWN  # below the minimum score


def test_broken_detector_yields_unknown():
    class Broken:
        def detect(self, text, site=None):
            raise RuntimeError("engine offline")

    assert detect_language("the and of", Broken()) == UNKNOWN


def test_lookup_and_null_detectors():
    site = EepsiteId("forum.i2p")
    assert detect_language("", LookupDetector({"forum.i2p": "de"}), site) == "de"
    assert detect_language("the and", LookupDetector({}), site) == UNKNOWN
    assert detect_language("the and of to is", NullDetector()) == UNKNOWN
    assert LookupDetector(lambda h: "it").detect("", site) == "it"
