"""Annotator guidelines served verbatim by GET /api/guidelines."""

GUIDELINES_TEXT = """\
ANNOTATION GUIDELINES
=====================

You will see two camera-movement sequences, A and B, that start from the same
input view. For each dimension, pick "A wins" when A is clearly better,
"B wins" when B is clearly better, and "Tie" when you cannot honestly tell
them apart. Judge each dimension on its own; a sequence can win on one
dimension and lose on another.

THE THREE DIMENSIONS
--------------------

Visual Quality (VQ)
  How clean the frames themselves look. Penalize blur, smearing, blocky or
  washed-out regions, flicker, and clipped highlights or shadows. Ignore the
  camera path and the composition; only the per-frame image quality matters.

Motion Quality (MQ)
  How the camera moves. Reward steady, smooth, purposeful movement. Penalize
  sequences that barely move at all, that jump or judder, or that swing so
  far the view loses its connection to the starting scene.

Composition Aesthetic (CA)
  Whether the framing actually gets better over the course of the sequence.
  Compare the final framing against the first frame: a strong CA sequence
  ends on a noticeably better-organized view. A sequence with beautiful but
  unchanging framing should not win on CA; this dimension scores the
  improvement, not the static image.

WHAT TO LOOK FOR IN COMPOSITION
-------------------------------

- Layering Complexity: does the view develop a readable foreground, middle
  ground, and background, with the planes reinforcing each other rather than
  colliding?
- Geometric Harmony: do lines, shapes, and edges organize the frame and give
  it structure or productive tension?
- Color Relationships: do blocks of color and contrast carry visual weight
  where the eye should go?
- Frame Utilization: is the whole frame working, including edges and corners,
  with secondary elements supporting the main subject?
- Visual Rhythm: do repeated elements or patterns give the frame flow and
  movement?
- Juxtaposition Development: does the sequence build meaningful relationships
  between the elements in the frame?

KEY POINTS CHECKLIST (CA)
-------------------------

- Compositional Reasonableness: the arrangement should be objectively
  sensible and balanced.
- Compositional Clarity: the elements should read clearly, without visual
  clutter.
- Compositional Detail: the relationships between elements should show care
  and refinement.
- Compositional Creativity: the framing should be pleasing and show an
  inventive arrangement.
- Compositional Safety: the framing should not create tension or an
  uncomfortable viewing experience.

MECHANICS
---------

Keys: "a" = A wins, "t" = Tie, "b" = B wins. Use the scrubber and the
first/last-frame buttons to compare endpoints before deciding. Submitting
records your choice for the active dimension and loads the next pair.
"""
