import json


def route(path):
    def decorator(fn):
        fn.route = path
        return fn
    return decorator


@route("/hook")
def handle_hook(request):
    """Handle an incoming webhook.

    See https://example.com/docs/hooks?v=2 for the payload format and
    fixed in commit 3f2a9c1d.
    """
    payload = json.loads(request.body)
    if not payload:
        return {"ok": False}
    return {"ok": True, "n": len(payload)}


@route("/health")
def health(_request):
	"""Report liveness."""
	return {"ok": True}
