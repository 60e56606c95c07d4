import pytest

from deltadec import DecodeConfig, ScriptedBackend, TokenSequence, train_ngram
import numpy as np


@pytest.fixture
def tiny_ngram():
    return train_ngram(["a b", "a b", "a c"], order=2, smoothing_k=0.01)


@pytest.fixture
def scripted_pair():
    """Scripted backend exposing the original=[2,1] / masked=[0,3] fixture.

    Vocab ids: 0 is the mask/eos token, 1 and 2 are the contested pair
    (logit vectors have length 3). Masking token 1 of the prompt flips the
    table lookup to the 'masked' row.
    """
    prompt = TokenSequence.prompt([1, 2])
    masked_key = (1, 0)  # token 2 replaced by mask token 0
    table = {
        prompt.tokens: np.array([-9.0, 2.0, 1.0]),
        masked_key: np.array([-9.0, 0.0, 3.0]),
    }
    backend = ScriptedBackend(table=table, default=np.zeros(3))
    return prompt, backend


@pytest.fixture
def greedy_config():
    return DecodeConfig(
        alpha=0.3, r_mask=0.7, beta=0.1, seed=7, max_new_tokens=4,
        stop_tokens=frozenset({0}), mask_token=0,
    )
