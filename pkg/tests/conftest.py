import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def word_product(a_bits, b_bits):
    """Independent oracle: multiply two blades by sorting their index words.

    Bubble sort the concatenated index list, flipping the sign per swap, and
    contract each adjacent equal pair with ``e_j e_j = -1``.
    """
    word = [j for j in range(8) if a_bits >> j & 1] + [j for j in range(8) if b_bits >> j & 1]
    sign = 1
    changed = True
    while changed:
        changed = False
        for i in range(len(word) - 1):
            if word[i] > word[i + 1]:
                word[i], word[i + 1] = word[i + 1], word[i]
                sign = -sign
                changed = True
    out = []
    for j in word:
        if out and out[-1] == j:
            out.pop()
            sign = -sign
        else:
            out.append(j)
    bits = 0
    for j in out:
        bits |= 1 << j
    return sign, bits


def brute_product(a, b, n):
    """Clifford product of coefficient vectors via :func:`word_product`."""
    out = np.zeros(1 << n)
    for A in range(1 << n):
        for B in range(1 << n):
            s, C = word_product(A, B)
            out[C] += s * a[A] * b[B]
    return out


# acceptance criteria register their verdicts here; printed at the end of the run
ACCEPTANCE = {}


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
