from fastapi import APIRouter

from frogsim.enums import VertexLabel
from frogsim.export import vertex_id
from frogsim.gw_trees import label_stretches, sample_tree
from frogsim.schemas.trees import TreeEdge, TreeSampleRequest, TreeSampleResponse

router = APIRouter(prefix="/trees", tags=["trees"])


@router.post("/sample", response_model=TreeSampleResponse)
def sample(body: TreeSampleRequest):
    """The explored window of one sampled tree, in the same shape as the CLI's edge list."""
    tree = sample_tree(body.offspring, body.seed, body.depth)
    label_stretches(tree, body.depth)
    edges = []
    for v in tree.walk(body.depth):
        up = tree.parent(v)
        edges.append(TreeEdge(
            parent=None if up is None else vertex_id(up),
            child=vertex_id(v),
            label=tree.labels.get(v, VertexLabel.UNLABELED),
            frog_count=tree.frog_count(v, body.frog_init),
        ))
    return TreeSampleResponse(seed=body.seed, depth=body.depth, vertices=len(edges), edges=edges)
