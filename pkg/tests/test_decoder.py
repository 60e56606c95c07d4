import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltadec import (
    DecodeConfig,
    MaskPlan,
    ScriptedBackend,
    TokenSequence,
    apc_head,
    decode_step,
    delta_combine,
    generate,
    softmax,
)
from deltadec.core import InvalidInput
from deltadec.masking import select_mask_indices
from deltadec.rng import DOMAIN_MASK, DOMAIN_SAMPLE, make_rng

finite_vec = st.lists(
    st.floats(min_value=-30, max_value=30, allow_nan=False),
    min_size=1, max_size=32,
).map(np.array)


class TestDeltaCombine:
    def test_alpha_zero_identity(self):
        orig = np.array([2.0, -1.0, 0.5])
        out = delta_combine(orig, np.array([5.0, 5.0, 5.0]), alpha=0.0)
        np.testing.assert_array_equal(out, orig)

    def test_hand_arithmetic(self):
        out = delta_combine([2.0, 1.0], [0.0, 3.0], alpha=0.3)
        np.testing.assert_allclose(out, [2.6, 0.4], atol=1e-12)

    def test_equal_branches_cancel(self):
        vec = np.array([1.0, 1.0])
        for alpha in (0.0, 0.3, 1.0):
            np.testing.assert_allclose(delta_combine(vec, vec, alpha), vec)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            delta_combine([1.0], [1.0, 2.0], 0.3)

    def test_alpha_out_of_range(self):
        with pytest.raises(InvalidInput):
            delta_combine([1.0], [1.0], 1.5)

    @given(finite_vec, st.floats(min_value=0, max_value=1))
    @settings(max_examples=100)
    def test_matches_elementwise_oracle(self, orig, alpha):
        masked = orig[::-1].copy()
        out = delta_combine(orig, masked, alpha)
        # independent scalar-loop oracle
        for i in range(len(orig)):
            expected = (1 + alpha) * orig[i] - alpha * masked[i]
            assert abs(out[i] - expected) < 1e-12

    def test_monotone_in_alpha_for_boosted_token(self):
        # masked strictly above original on token 0 only: its combined
        # logit must strictly decrease as alpha grows
        orig = np.array([1.0, 2.0, 3.0])
        masked = np.array([4.0, 2.0, 3.0])
        values = [delta_combine(orig, masked, a)[0] for a in (0.0, 0.25, 0.5, 1.0)]
        assert all(b < a for a, b in zip(values, values[1:]))


class TestApcHead:
    def test_beta_zero_keeps_all(self):
        assert apc_head([3.0, -5.0, 0.0], beta=0.0) == frozenset({0, 1, 2})

    def test_beta_one_keeps_tie_set(self):
        assert apc_head([3.0, 1.0, 3.0], beta=1.0) == frozenset({0, 2})

    def test_hand_softmax_case(self):
        logits = [math.log(100), math.log(11), math.log(9)]
        # probs = 100/120, 11/120, 9/120; threshold = 0.1 * (100/120)
        assert apc_head(logits, beta=0.1) == frozenset({0, 1})

    def test_argmax_always_in_head(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            logits = rng.normal(size=rng.integers(1, 40))
            beta = rng.random()
            assert int(np.argmax(logits)) in apc_head(logits, beta)

    def test_temperature_independence(self):
        # head is defined at T=1 regardless of decode temperature; the
        # same logits scaled by a constant do change the head, but the
        # config temperature never enters apc_head's signature
        logits = [2.0, 1.0, 0.0]
        assert apc_head(logits, 0.2) == apc_head(logits, 0.2)


class TestDecodeStep:
    def _plan(self, seq, r_mask=0.5, seed=0):
        return select_mask_indices(seq, r_mask, 0, make_rng(seed, DOMAIN_MASK))

    def test_alpha_zero_matches_baseline(self, scripted_pair):
        prompt, backend = scripted_pair
        cfg = DecodeConfig(alpha=0.0, beta=0.0, r_mask=1.0, mask_token=0, seed=1)
        plan = self._plan(prompt, r_mask=1.0)
        trace = decode_step(prompt, cfg, backend, plan)
        assert trace.chosen == int(np.argmax(backend.logits(prompt)))

    def test_hand_derived_combination(self):
        # original=[2,1], masked=[0,3], alpha=0.3 -> combined=[2.6, 0.4]
        prompt = TokenSequence.prompt([0, 1])
        backend = ScriptedBackend(
            table={(0, 1): np.array([2.0, 1.0]), (1, 1): np.array([0.0, 3.0])},
            default=np.zeros(2),
        )
        cfg = DecodeConfig(alpha=0.3, beta=0.0, r_mask=0.5, mask_token=1, seed=3)
        plan = MaskPlan(indices=frozenset({0}), mask_token=1, eligible_len=2)
        trace = decode_step(prompt, cfg, backend, plan)
        np.testing.assert_allclose(trace.combined_logits, [2.6, 0.4], atol=1e-12)
        assert trace.chosen == 0

    def test_hallucination_flip(self):
        # baseline argmax is token 1; the contrast flips it to token 0
        prompt = TokenSequence.prompt([0, 1])
        backend = ScriptedBackend(
            table={(0, 1): np.array([1.0, 1.1]), (1, 1): np.array([0.0, 3.0])},
            default=np.zeros(2),
        )
        plan = MaskPlan(indices=frozenset({0}), mask_token=1, eligible_len=2)
        baseline = decode_step(
            prompt, DecodeConfig(alpha=0.0, beta=0.0, mask_token=1, seed=0),
            backend, plan,
        )
        delta = decode_step(
            prompt, DecodeConfig(alpha=0.5, beta=0.0, mask_token=1, seed=0),
            backend, plan,
        )
        assert baseline.chosen == 1
        assert delta.chosen == 0
        np.testing.assert_allclose(delta.combined_logits, [1.5, 0.15], atol=1e-12)

    def test_distribution_zero_outside_head(self, scripted_pair):
        prompt, backend = scripted_pair
        cfg = DecodeConfig(alpha=0.3, beta=0.5, r_mask=0.5, mask_token=0, seed=2)
        plan = self._plan(prompt)
        trace = decode_step(prompt, cfg, backend, plan)
        assert abs(trace.distribution.sum() - 1.0) < 1e-9
        for token, p in enumerate(trace.distribution):
            if token not in trace.head_set:
                assert p == 0.0
        assert trace.chosen in trace.head_set

    def test_sample_mode_needs_rng(self, scripted_pair):
        prompt, backend = scripted_pair
        cfg = DecodeConfig(mode="sample", mask_token=0, seed=5)
        with pytest.raises(InvalidInput):
            decode_step(prompt, cfg, backend, self._plan(prompt), rng=None)

    def test_replay(self, scripted_pair):
        # re-running the step on the recorded inputs reproduces the trace
        prompt, backend = scripted_pair
        cfg = DecodeConfig(alpha=0.4, beta=0.2, mask_token=0, seed=11, mode="sample")
        plan = self._plan(prompt, seed=11)
        first = decode_step(prompt, cfg, backend, plan, make_rng(11, DOMAIN_SAMPLE))
        second = decode_step(prompt, cfg, backend, plan, make_rng(11, DOMAIN_SAMPLE))
        assert first.chosen == second.chosen
        np.testing.assert_array_equal(first.distribution, second.distribution)
        np.testing.assert_array_equal(first.combined_logits, second.combined_logits)
        assert first.head_set == second.head_set


class TestGenerate:
    def _path_backend(self, prompt, path, vocab_size=6):
        """Scripted backend that walks `path` greedily from `prompt`."""
        table = {}
        toks = prompt.tokens
        for i, token in enumerate(path):
            vec = np.linspace(-1.0, 0.0, vocab_size)
            vec[token] = 5.0
            table[toks] = vec
            toks = toks + (token,)
        return ScriptedBackend(table=table, default=np.linspace(-1.0, 0.0, vocab_size))

    def test_alpha_zero_equals_plain_greedy(self):
        prompt = TokenSequence.prompt([1, 2])
        backend = self._path_backend(prompt, [3, 4, 5])
        cfg = DecodeConfig(alpha=0.0, beta=0.0, r_mask=0.7, mask_token=0,
                           seed=1, max_new_tokens=3)
        result = generate(prompt, cfg, backend)
        assert result.sequence.generated_tokens == (3, 4, 5)
        assert result.stop_reason == "max_tokens"

    def test_immediate_stop(self):
        prompt = TokenSequence.prompt([1])
        vec = np.zeros(3)
        vec[2] = 9.0
        backend = ScriptedBackend(table={}, default=vec)
        cfg = DecodeConfig(alpha=0.0, beta=0.0, mask_token=0, seed=1,
                           stop_tokens=frozenset({2}), max_new_tokens=5)
        result = generate(prompt, cfg, backend)
        assert result.sequence.generated_tokens == ()
        assert result.traces == ()
        assert result.stop_reason == "stop_token"

    def test_sample_mode_deterministic(self):
        prompt = TokenSequence.prompt([1, 2])
        backend = ScriptedBackend(table={}, default=np.array([0.5, 1.0, 0.2, 0.7]))
        cfg = DecodeConfig(alpha=0.2, beta=0.0, mask_token=0, seed=99,
                           mode="sample", max_new_tokens=6)
        a = generate(prompt, cfg, backend)
        b = generate(prompt, cfg, backend)
        assert a.sequence == b.sequence
        assert a.stop_reason == b.stop_reason

    def test_trace_count_matches_generation(self):
        prompt = TokenSequence.prompt([1])
        backend = ScriptedBackend(table={}, default=np.array([0.0, 0.0, 1.0]))
        cfg = DecodeConfig(alpha=0.0, beta=0.0, mask_token=0, seed=1, max_new_tokens=4)
        result = generate(prompt, cfg, backend)
        assert len(result.traces) == len(result.sequence.generated_tokens) == 4

    def test_remask_each_step_changes_plans(self):
        prompt = TokenSequence.prompt(list(range(1, 9)))
        backend = ScriptedBackend(table={}, default=np.array([0.0] * 8 + [1.0]))
        cfg = DecodeConfig(alpha=0.3, beta=0.0, r_mask=0.5, mask_token=0,
                           seed=4, max_new_tokens=4, remask_each_step=True)
        result = generate(prompt, cfg, backend)
        plans = {t.mask_plan.indices for t in result.traces}
        assert len(plans) > 1

    def test_rejects_prompt_with_generated_tokens(self):
        seq = TokenSequence(tokens=(1, 2), prompt_len=1)
        backend = ScriptedBackend(table={}, default=np.zeros(3))
        with pytest.raises(InvalidInput):
            generate(seq, DecodeConfig(mask_token=0, seed=1), backend)

    def test_temperature_invariant_greedy(self):
        prompt = TokenSequence.prompt([1, 2])
        backend = self._path_backend(prompt, [3, 4])
        base = DecodeConfig(alpha=0.3, beta=0.1, mask_token=0, seed=1, max_new_tokens=2)
        hot = base.with_overrides(temperature=5.0)
        assert generate(prompt, base, backend).sequence == generate(prompt, hot, backend).sequence


def test_alpha_zero_distribution_identity():
    # with alpha=0 the filtered distribution equals softmax(original, T)
    # restricted to the head and renormalized
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = rng.integers(2, 20)
        original = rng.normal(size=n)
        backend = ScriptedBackend(table={}, default=original)
        prompt = TokenSequence.prompt([0])
        temp = float(rng.uniform(0.5, 2.0))
        beta = float(rng.random())
        cfg = DecodeConfig(alpha=0.0, beta=beta, temperature=temp, mask_token=0, seed=0)
        plan = select_mask_indices(prompt, 1.0, 0, make_rng(0, DOMAIN_MASK))
        trace = decode_step(prompt, cfg, backend, plan)
        head = sorted(trace.head_set)
        expected = softmax(original, temp)
        expected_restricted = np.zeros(n)
        expected_restricted[head] = expected[head] / expected[head].sum()
        np.testing.assert_allclose(trace.distribution, expected_restricted, atol=1e-9)
