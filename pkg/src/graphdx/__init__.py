"""graphdx: disease-diagnosis dialogue agent.

Builds a weighted symptom-disease graph from a corpus of diagnosis goals
(PMI symptom co-occurrence edges, sf-idf symptom-disease edges), trains a
Q-network whose action values are inner products between graph-convolution
node embeddings and an encoded dialogue state, and serves the trained
policy over HTTP for live human sessions.
"""

__version__ = "0.1.0"
