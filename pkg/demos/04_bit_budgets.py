# %% [markdown]
# Latent bit budgets
# ==================
#
# A continuous latent grid of N tokens keeping k channels at b bits costs
# N * k * b bits; a discrete codebook of size K costs N * log2(K).  The table
# below puts a few grid sizes next to typical codebook tokenizers.

# %%
from pcabottleneck.metrics import BitBudgetSpec, bit_budget

rows = [
    ("1x1, k=16, fp32", BitBudgetSpec.continuous(1, 16, 32)),
    ("4x4, k=16, fp32", BitBudgetSpec.continuous(16, 16, 32)),
    ("16x16, k=8, fp16", BitBudgetSpec.continuous(256, 8, 16)),
    ("16x16, k=256, fp32", BitBudgetSpec.continuous(256, 256, 32)),
    ("16x16 tokens, K=1024", BitBudgetSpec.discrete(256, 1024)),
    ("16x16 tokens, K=8192", BitBudgetSpec.discrete(256, 8192)),
    ("16x16 tokens, K=8912", BitBudgetSpec.discrete(256, 8912)),
]
for name, spec in rows:
    exact = bit_budget(spec)
    whole = bit_budget(spec, ceil_per_token=True)
    print(f"{name:24s} {exact:12.1f} bits  ({whole:.0f} with whole bits per token)")
