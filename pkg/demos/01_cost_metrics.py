#!/usr/bin/env python3
"""Walk through the three complexity metrics on a zoo of layers.

RM counts scalar multiplications, BOP prices mixed-precision fixed-point
arithmetic at the bit level, and NABS counts the adders that remain after
every multiplication is rewritten as shifts and adds.
"""

import nncost as nc

bits = nc.BitwidthConfig(b_w=8, b_i=8, b_a=8)

layers = {
    "dense 64x32": nc.Dense(n_n=64, n_i=32, activation="relu"),
    "conv1d 8f k5": nc.Conv1D(n_f=8, n_i=4, n_k=5, n_s=64,
                              activation="relu"),
    "rnn 32h": nc.VanillaRNN(n_i=16, n_h=32, n_s=10),
    "lstm 32h": nc.LSTM(n_i=16, n_h=32, n_s=10),
    "gru 32h": nc.GRU(n_i=16, n_h=32, n_s=10),
    "esn 128r": nc.EchoState(n_i=16, N_r=128, s_p=0.1, n_o=4, n_s=10,
                             leak=0.6),
}

# The multiplier representation decides NABS: a full 8-bit multiplier is
# worth 7 adders, an additive power-of-two weight k-1, a power-of-two 0.
schemes = {
    "uniform8": nc.FixedUniform(8),
    "apot8:3": nc.APoT(8, 3),
    "pot8": nc.PoT(8),
}

print(f"{'layer':<14} {'RM':>10} {'BOP':>12} "
      + "".join(f"{name + ' NABS':>16}" for name in schemes))
for name, layer in layers.items():
    rm = nc.rm_layer(layer)
    bop = nc.bop_layer(layer, bits)
    nabs = [nc.nabs_layer(layer, bits, s) for s in schemes.values()]
    print(f"{name:<14} {rm:>10} {bop:>12} "
          + "".join(f"{v:>16}" for v in nabs))

# Whole-network reports aggregate per-layer rows and serialize to CSV/JSON.
net = nc.NetworkSpec("equalizer", (
    nc.Conv1D(n_f=4, n_i=1, n_k=7, n_s=32, activation="relu"),
    nc.Dense(n_n=16, n_i=4 * 26, activation="tanh"),
    nc.Dense(n_n=1, n_i=16, activation="linear"),
))
report = nc.cost_report(net, bits, nc.PoT(8))
print("\nthree-layer network, PoT weights:")
print(report.to_csv())

# GRU vs LSTM: the gate structure shows up directly in the counts.
gru, lstm = layers["gru 32h"], layers["lstm 32h"]
print(f"GRU/LSTM multiplication ratio: "
      f"{nc.rm_layer(gru) / nc.rm_layer(lstm):.3f}")

# Training effort is summarized separately as epochs x batches.
print(f"NENB for 50 epochs of 128 batches: {nc.nenb(50, 128)}")
