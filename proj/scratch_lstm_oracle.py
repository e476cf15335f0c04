import numpy as np

# Independent reference for one predictor_step on tiny dims:
# hidden=1, max_actions=1, embed_dim=1, input = [r, R, e] (2*max_actions+embed).
# Gate order i, f, g, o. Two layers, tanh head.


def sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))


def cell(wx, wh, b, x, h, c):
    z = wx @ x + wh @ h + b
    i, f, g, o = z[0], z[1], z[2], z[3]
    i = sigmoid(i)
    f = sigmoid(f)
    g = np.tanh(g)
    o = sigmoid(o)
    c2 = f * c + i * g
    h2 = o * np.tanh(c2)
    return h2, c2


l1_wx = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [-0.7, 0.8, 0.9], [0.3, -0.2, 0.1]])
l1_wh = np.array([[0.5], [-0.5], [0.25], [0.75]])
l1_b = np.array([0.01, 0.02, 0.03, 0.04])
l2_wx = np.array([[-0.3], [0.6], [0.2], [-0.1]])
l2_wh = np.array([[0.45], [-0.15], [0.05], [0.35]])
l2_b = np.array([0.005, -0.01, 0.015, -0.02])
head_w = np.array([[0.9]])
head_b = np.array([-0.1])
embed = np.array([0.37])

r, R = 0.25, -0.5
h1 = np.zeros(1)
c1 = np.zeros(1)
h2 = np.zeros(1)
c2 = np.zeros(1)

for step, (rr, RR) in enumerate([(0.25, -0.5), (-0.125, 0.75)]):
    x = np.array([rr, RR, embed[0]])
    h1, c1 = cell(l1_wx, l1_wh, l1_b, x, h1, c1)
    h2, c2 = cell(l2_wx, l2_wh, l2_b, h1, h2, c2)
    out = np.tanh(head_w @ h2 + head_b)
    print(f"step {step}: h1={h1[0]:.17g} c1={c1[0]:.17g} h2={h2[0]:.17g} c2={c2[0]:.17g} out={out[0]:.17g}")
