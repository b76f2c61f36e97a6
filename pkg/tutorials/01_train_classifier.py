"""
Training the theme classifier
=============================

Fit the four one-vs-rest logistic heads on a keyword-planted corpus, check
them on a held-out split and look at the precision-recall curves.
"""

# %%
# A synthetic corpus: each document has one or two planted themes.
from policylens.cli import stratified_split
from policylens.metrics import evaluate, pr_curve
from policylens.synthetic import make_policy_corpus
from policylens.textclf import classify_texts, tokenize, train
from policylens.themes import THEMES

docs, planted = make_policy_corpus(n_docs=400, seed=0)
print(docs[0].summary_text)
print(sorted(planted[0]))

# %%
# Hold out a fifth of every label pattern, then train with the defaults
# (500 epochs of gradient descent, learning rate 0.5).
train_idx, test_idx = stratified_split(planted, 0.2, seed=0)
model = train([tokenize(docs[i].summary_text) for i in train_idx],
              [planted[i] for i in train_idx])
print(f"vocabulary: {len(model.vocab)} terms")
for head in model.heads:
    print(f"{head.theme:<26} epochs {head.epochs_run:>3}  loss {head.final_loss:.4f}")

# %%
# Scores at or above 0.5 become labels.
scores, preds = classify_texts(model, [docs[i].summary_text for i in test_idx])
report = evaluate(preds, [planted[i] for i in test_idx])
print(report.to_text())

# %%
# Average precision per theme.
import numpy as np

for k, theme in enumerate(THEMES):
    y = np.array([theme in planted[i] for i in test_idx])
    print(f"{theme:<26} AP {pr_curve(scores[:, k], y).average_precision:.3f}")
