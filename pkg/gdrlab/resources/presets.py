

class Layouts:
    """Разбиения 4096 кодов, используемые в экспериментах"""

    G1 = (4096,)                                # без группировки
    G2 = (64, 64)                               # 64 x 64 == num_code
    G4 = (8, 8, 8, 8)
    G8 = (2, 2, 2, 2, 4, 4, 4, 4)               # нецелый корень, смешанное основание

    BY_GROUPS = {1: G1, 2: G2, 4: G4, 8: G8}


class Colors:
    BLACK = (0, 0, 0)
    WHITE = (255, 255, 255)
    RED = (220, 40, 40)
    GREEN = (40, 200, 60)
    BLUE = (40, 70, 230)
    YELLOW = (235, 215, 40)
    MAGENTA = (210, 50, 200)
    CYAN = (40, 210, 220)


class Shapes:
    TRIANGLE = "triangle"
    SQUARE = "square"
    CIRCLE = "circle"
    DIAMOND = "diamond"
    PENTAGON = "pentagon"
    HEXAGON = "hexagon"


class Backgrounds:
    # Палитра фона держится в средних тонах, чтобы чёрные и белые объекты не сливались с ним
    PALETTE = ((96, 110, 128), (140, 120, 100), (90, 130, 110), (150, 150, 160), (120, 100, 140))
    TRAIN_TEXTURES = ("plain", "stripes")
    TRANSFER_TEXTURES = ("checker", "dots")


class Presets:
    """Наборы словарей атрибутов. Значения: (colors, shapes, textures, min_objects, max_objects)"""

    FIG1 = "fig1"
    DESK = "desk"
    TRANSFER = "transfer"

    ALL = (FIG1, DESK, TRANSFER)

    VOCABULARIES = {
        FIG1: (
            (Colors.BLACK, Colors.WHITE),
            (Shapes.TRIANGLE, Shapes.SQUARE, Shapes.CIRCLE),
            Backgrounds.TRAIN_TEXTURES,
            1, 4,
        ),
        DESK: (
            (Colors.RED, Colors.GREEN, Colors.BLUE, Colors.YELLOW, Colors.MAGENTA, Colors.CYAN),
            (Shapes.TRIANGLE, Shapes.SQUARE, Shapes.CIRCLE, Shapes.DIAMOND, Shapes.PENTAGON, Shapes.HEXAGON),
            Backgrounds.TRAIN_TEXTURES,
            1, 4,
        ),
        # Тот же словарь объектов, новые текстуры фона и другое распределение числа объектов
        TRANSFER: (
            (Colors.RED, Colors.GREEN, Colors.BLUE, Colors.YELLOW, Colors.MAGENTA, Colors.CYAN),
            (Shapes.TRIANGLE, Shapes.SQUARE, Shapes.CIRCLE, Shapes.DIAMOND, Shapes.PENTAGON, Shapes.HEXAGON),
            Backgrounds.TRANSFER_TEXTURES,
            2, 4,
        ),
    }


class Artifacts:
    """Имена файлов, которые пишут стадии обучения и анализ"""

    STAGE1_DIR = "stage1"
    STAGE2_DIR = "stage2"
    CHECKPOINT = "ckpt_{step:06d}.pt"
    BEST = "best.pt"
    LOSS_CURVE = "loss_curve.csv"
    RECORDS = "records.jsonl"
    SUMMARY = "summary.txt"
    DIVERGENCE = "divergence.json"
