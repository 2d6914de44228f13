"""Topic model evaluation at both topic and document level.

Topic-level scoring uses NPMI observed coherence; document-level scoring
uses the topic intrusion task (human metrics: model precision, topic log
odds, direct ratings) and a fully automatic intruder predictor whose
aggregate scores track human judgements.
"""

from .coherence import CoherenceReport, model_coherence, npmi_pair, topic_coherence
from .corpus import (CooccurrenceStats, Document, InvertedIndex, PreprocessConfig,
                     Vocabulary, build_index, count_cooccurrence, preprocess)
from .topicmodel import (DocTopicDist, EmbeddingTable, TopicModelArtifact,
                         TopicWordDist, build_cluster_model, cluster_allocation,
                         cluster_topic_dist, kmeans_clusters, load_model,
                         save_model)
from .intrusion import (AnnotationRecord, Hit, IntrusionItem, MetricReport,
                        RatingRecord, direct_rating_report, make_control,
                        model_precision, quality_filter, sample_intruder,
                        score_human, topic_log_odds)
from .autoeval import (LinearRankModel, RankInstance, build_training_set,
                       correlate, extract_features, group_accuracy,
                       pairwise_logprob, predict_intruder, query_likelihood,
                       system_model_precision, train_ranker)

__version__ = "0.1.0"
