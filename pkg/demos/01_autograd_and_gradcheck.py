"""A tour of the autodiff engine behind the stream networks.

Builds a small conv -> relu -> pool -> dense -> softmax pipeline by hand,
trains it for a few steps on random data, and finishes with the finite-
difference gradient audit that guards every primitive.
"""

import numpy as np

from stnet import (
    Tape,
    Tensor,
    backward,
    conv2d,
    dense,
    maxpool2,
    relu,
    run_gradient_check_suite,
    softmax_cross_entropy,
)
from stnet.autograd import reshape
from stnet.rng import RandomState

rng = RandomState(seed=7)

# a toy batch: 8 images, 1 channel, 8x8, two classes decided by mean brightness
x = rng.uniforms(8 * 64).reshape(8, 1, 8, 8).astype(np.float32)
labels = (x.mean(axis=(1, 2, 3)) > 0.5).astype(np.int64)

w1 = Tensor((rng.uniforms(4 * 1 * 3 * 3).reshape(4, 1, 3, 3) - 0.5), requires_grad=True)
b1 = Tensor(np.zeros(4), requires_grad=True)
w2 = Tensor((rng.uniforms(4 * 4 * 4 * 2).reshape(4 * 4 * 4, 2) - 0.5) * 0.3, requires_grad=True)
b2 = Tensor(np.zeros(2), requires_grad=True)
params = [w1, b1, w2, b2]

print("step  loss      accuracy")
for step in range(30):
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        h = maxpool2(relu(conv2d(Tensor(x), w1, b1)))
        logits = dense(reshape(h, (8, -1)), w2, b2)
        loss, probs = softmax_cross_entropy(logits, labels)
    backward(loss, tape)
    for p in params:
        p.data -= 0.5 * p.grad  # plain gradient descent is enough here
    if step % 5 == 0 or step == 29:
        acc = (probs.data.argmax(axis=1) == labels).mean()
        print(f"{step:>4}  {float(loss.data):.4f}    {acc:.2f}")

print("\ngradient audit (central finite differences vs backward):")
worst = 0.0
for op, case, err in run_gradient_check_suite(cases_per_op=3):
    worst = max(worst, err)
    print(f"  {op:<24} case {case}: max relative error {err:.2e}")
print(f"worst over all cases: {worst:.2e}  (threshold 1e-3)")
