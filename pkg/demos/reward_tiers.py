"""
Format and answer rewards
=========================

Responses earn a format score for following the think/answer template and
one more point when the answer span matches the reference.
"""

from softgate import answer_reward, format_reward, total_reward

samples = [
    "<think> 6 times 7 </think> <answer> 42 </answer>",
    "<think> 6 times 7 </think> <answer> 41 </answer>",
    "<think> missing the close tag <answer> 42 </answer>",
    "<answer> 42 </answer>",
    "just 42",
]
for text in samples:
    print(f"{format_reward(text):>5} {answer_reward(text, '42'):>4} {total_reward(text, '42'):>5}  {text}")
